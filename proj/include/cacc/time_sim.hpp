#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cacc/contention.hpp"
#include "cacc/freq_control.hpp"
#include "cacc/ift.hpp"
#include "cacc/optimizer.hpp"
#include "cacc/trajectory.hpp"

namespace cacc {

enum class Strategy { Oift, Dift, Fift };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

struct SimConfig {
  double dt = 0.1;              // s
  std::uint64_t seed = 1;
  double duration = 240.0;      // s
  Strategy strategy = Strategy::Oift;
  double accel_min = -5.0;      // m/s^2
  double accel_max = 3.0;       // m/s^2
  bool accel_limits_enabled = true;
  double update_period_tau = 60.0;      // s, topology re-optimization period
  double lead_time_delta_tau = 1.0;     // s, planning lead time
  std::optional<double> force_success_probability;  // diagnostic override
  bool record_mode_history = false;

  void validate() const;
};

struct VehicleState {
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double ff_filter_state_1 = 0.0;  // low-pass state, immediate predecessor accel
  double ff_filter_state_2 = 0.0;  // low-pass state, second predecessor accel
};

// One Bernoulli draw per active sender against its per-attempt success
// probability; inactive senders never appear in the outcome.
DegenerationScenario sample_link_outcomes(const Ift& ift, const SenderSuccessProfile& profile,
                                          std::mt19937_64& rng);

struct CommandResult {
  double u = 0.0;           // applied command (after limits)
  double u_unclipped = 0.0;
  ControllerMode mode = ControllerMode::Acc;
  double weighted_error = 0.0;
};

// Acceleration command for follower i from the current states and the
// sender outcomes of this instant. The spacing-error derivative contains
// the vehicle's own commanded acceleration through the headway term, so
// the command is solved algebraically:
//   u = (wk^2 e + wk * relative_speed_term + ff) / (1 + wk (2-alpha_b) h)
// which reproduces the closed-loop transfer functions of the
// frequency-domain model. Mutates vehicle i's feedforward filter states.
// Predecessor entries of `states` must already carry this step's
// accelerations. With fift_controller set the one-predecessor scheme is
// used: CACC2 when the immediate predecessor's message arrived, ACC
// otherwise.
CommandResult control_command(int i, std::span<VehicleState> states, const BitVec& outcome,
                              const ControllerParams& params, const SimConfig& config,
                              bool fift_controller = false);
CommandResult control_command(int i, std::span<VehicleState> states,
                              const DegenerationScenario& scenario,
                              const ControllerParams& params, const SimConfig& config,
                              bool fift_controller = false);

struct RunMetrics {
  // [vehicle][step]; vehicle 0 rows are zero for the error series.
  std::vector<std::vector<double>> spacing_error;
  std::vector<std::vector<double>> speed_error;
  std::vector<std::vector<double>> speed;
  std::vector<double> spacing_error_std;
  std::vector<double> speed_error_std;
  std::vector<double> max_abs_spacing_error;
  double total_oscillation_energy = 0.0;  // sum_i integral (v_i - mean_i)^2 dt
  long speed_saturation_events = 0;
  std::vector<std::uint32_t> outcome_history;   // sampled outcome pattern per step
  std::vector<ReceiverStatus> mode_history;     // filled when record_mode_history
};

// Topology (and its success profile) deployed for the period starting at
// the given time.
struct PeriodPlan {
  Ift ift;
  SenderSuccessProfile profile;
};
using PlanFn = std::function<PeriodPlan(double period_start)>;

// Closed-loop run. The plan function is invoked at t=0 and at every
// update_period_tau boundary. Throws CollisionError when a spacing reaches
// zero.
RunMetrics run_platoon(int n_plus_1, const ControllerParams& params, const SimConfig& config,
                       const LeaderTrajectory& leader, const PlanFn& plan,
                       bool fift_controller = false);

// Memoized topology optimization: the inputs are fixed at construction, so
// every period boundary reuses one solve.
class OiftPlanner {
 public:
  OiftPlanner(int n_plus_1, TrafficConditions traffic, ContentionCoefficients coeffs,
              ControllerParams params, TrajectorySpectrum spectrum, OptimizeOptions opts = {});
  const OptimizationResult& plan();

 private:
  int n_plus_1_;
  TrafficConditions traffic_;
  ContentionCoefficients coeffs_;
  ControllerParams params_;
  TrajectorySpectrum spectrum_;
  OptimizeOptions opts_;
  std::optional<OptimizationResult> cached_;
};

struct StrategySetup {
  int n_plus_1 = 15;
  TrafficConditions traffic;
  ContentionCoefficients coeffs;
  ControllerParams params;
  SimConfig sim;
  LeaderTrajectory leader;
};

// One seeded run of a strategy. OIFT needs a planner; when none is given
// one is built from the leader trajectory's spectrum.
RunMetrics run_strategy(const StrategySetup& setup, Strategy strategy,
                        OiftPlanner* planner = nullptr);

struct StrategySummary {
  Strategy strategy = Strategy::Oift;
  std::vector<double> mean_spacing_error_std;  // per vehicle, over seeds
  std::vector<double> mean_speed_error_std;
  std::vector<double> mean_max_abs_spacing_error;
  std::vector<double> per_seed_total_energy;   // seed order
  double mean_total_energy = 0.0;
};

// Runs every strategy over the seed set. Seeded runs are independent and
// execute on `threads` workers; results merge in seed order, so the output
// is identical to a serial sweep.
std::vector<StrategySummary> compare_strategies(const StrategySetup& setup,
                                                std::span<const std::uint64_t> seeds,
                                                OiftPlanner* planner = nullptr,
                                                int threads = 1);

}  // namespace cacc
