#include "cacc/time_sim.hpp"

#include <algorithm>
#include <cmath>

#include "cacc/errors.hpp"
#include "cacc/oscillation_energy.hpp"
#include "cacc/parallel.hpp"

namespace cacc {
namespace {

double canonical_uniform(std::mt19937_64& rng) {
  // 53-bit mantissa draw; keeps the stream identical across standard
  // library implementations.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ControllerMode mode_for(int i, std::uint32_t outcome_pattern, bool fift) {
  if (fift) {
    const bool heard = ((outcome_pattern >> (i - 1)) & 1u) != 0;
    return heard ? ControllerMode::Cacc2 : ControllerMode::Acc;
  }
  return receiver_mode(outcome_pattern, i);
}

}  // namespace

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Oift: return "oift";
    case Strategy::Dift: return "dift";
    case Strategy::Fift: return "fift";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "oift" || name == "OIFT") return Strategy::Oift;
  if (name == "dift" || name == "DIFT") return Strategy::Dift;
  if (name == "fift" || name == "FIFT") return Strategy::Fift;
  throw ValidationError("unknown strategy '" + name + "' (expected oift, dift or fift)");
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("sim.dt must be > 0");
  if (!(duration > 0.0)) throw ValidationError("sim.duration must be > 0");
  if (accel_limits_enabled && !(accel_min < 0.0 && accel_max > 0.0)) {
    throw ValidationError("sim.accel limits must satisfy accel_min < 0 < accel_max");
  }
  if (!(update_period_tau > 0.0)) throw ValidationError("sim.update_period_tau must be > 0");
  if (lead_time_delta_tau < 0.0 || lead_time_delta_tau > update_period_tau) {
    throw ValidationError("sim.lead_time_delta_tau must lie in [0, update_period_tau]");
  }
  if (force_success_probability &&
      (*force_success_probability < 0.0 || *force_success_probability > 1.0)) {
    throw ValidationError("sim.force_success_probability must lie in [0,1]");
  }
}

DegenerationScenario sample_link_outcomes(const Ift& ift, const SenderSuccessProfile& profile,
                                          std::mt19937_64& rng) {
  if (profile.parent != ift.bits()) {
    throw ValidationError("success profile does not belong to this topology");
  }
  BitVec outcome(ift.bits().size(), 0);
  for (int i = 0; i < ift.size(); ++i) {
    if (!ift.active(i)) continue;
    const double p = profile.p_unsat[static_cast<std::size_t>(i)];
    outcome[static_cast<std::size_t>(i)] = canonical_uniform(rng) < p ? 1 : 0;
  }
  return DegenerationScenario{std::move(outcome), ift.bits()};
}

CommandResult control_command(int i, std::span<VehicleState> states, const BitVec& outcome,
                              const ControllerParams& params, const SimConfig& config,
                              bool fift_controller) {
  if (i < 1 || i >= static_cast<int>(states.size())) {
    throw ValidationError("control_command applies to followers only");
  }
  const std::uint32_t pattern = bits_to_pattern(outcome);
  const ControllerMode mode = mode_for(i, pattern, fift_controller);
  const ModeCoefficients mc = mode_coefficients(mode, params);
  const double h = params.headway_h;
  const double l = params.standstill_l;
  VehicleState& self = states[static_cast<std::size_t>(i)];
  const VehicleState& pred1 = states[static_cast<std::size_t>(i - 1)];

  const double err1 = (pred1.position - self.position) - (l + h * self.speed);
  double err2 = 0.0;
  double rel = mc.alpha_b * (pred1.speed - self.speed);
  if (i >= 2) {
    const VehicleState& pred2 = states[static_cast<std::size_t>(i - 2)];
    err2 = (pred2.position - self.position) - 2.0 * (l + h * self.speed);
    rel += mc.beta_b * (pred2.speed - self.speed);
  }
  const double e = mc.alpha_b * err1 + mc.beta_b * err2;

  // Feedforward: predecessor accelerations through the discretized
  // low-pass 1/(1 + (2-alpha_b)h s). Filter states advance only when the
  // corresponding message arrived; a failed sender contributes nothing.
  const double tf = (2.0 - mc.alpha_b) * h;
  const double decay = std::exp(-config.dt / tf);
  const bool heard1 = ((pattern >> (i - 1)) & 1u) != 0;
  const bool heard2 = i >= 2 && (((pattern >> (i - 2)) & 1u) != 0);
  if (heard1) {
    self.ff_filter_state_1 =
        decay * self.ff_filter_state_1 + (1.0 - decay) * pred1.accel;
  }
  if (heard2 && !fift_controller) {
    self.ff_filter_state_2 =
        decay * self.ff_filter_state_2 +
        (1.0 - decay) * states[static_cast<std::size_t>(i - 2)].accel;
  }
  double ff = mc.alpha_f * self.ff_filter_state_1;
  if (i >= 2 && !fift_controller) ff += mc.beta_f * self.ff_filter_state_2;

  // The error derivative is rel - (2-alpha_b) h u with u the command being
  // computed, so u appears on both sides; solving the loop keeps the
  // discrete system matched to the continuous design (a one-step-delayed
  // derivative is unstable at the nominal gains).
  const double wk = params.omega(mode);
  CommandResult r;
  r.mode = mode;
  r.weighted_error = e;
  r.u_unclipped = (wk * wk * e + wk * rel + ff) / (1.0 + wk * tf);
  r.u = config.accel_limits_enabled
            ? std::clamp(r.u_unclipped, config.accel_min, config.accel_max)
            : r.u_unclipped;
  return r;
}

CommandResult control_command(int i, std::span<VehicleState> states,
                              const DegenerationScenario& scenario,
                              const ControllerParams& params, const SimConfig& config,
                              bool fift_controller) {
  return control_command(i, states, scenario.outcome, params, config, fift_controller);
}

RunMetrics run_platoon(int n_plus_1, const ControllerParams& params, const SimConfig& config,
                       const LeaderTrajectory& leader, const PlanFn& plan,
                       bool fift_controller) {
  config.validate();
  if (n_plus_1 < 2) throw ValidationError("simulation needs at least two vehicles");
  const auto steps = static_cast<std::size_t>(std::llround(config.duration / config.dt));
  if (leader.position.size() < steps || std::abs(leader.dt - config.dt) > 1e-12) {
    throw ValidationError("leader trajectory does not cover the run at the configured dt");
  }

  std::mt19937_64 rng(config.seed);
  PeriodPlan period = plan(0.0);
  if (period.ift.size() != n_plus_1) {
    throw ValidationError("planned topology size does not match the platoon");
  }
  auto profile = period.profile;
  long next_period = 1;

  const std::size_t nv = static_cast<std::size_t>(n_plus_1);
  std::vector<VehicleState> states(nv);
  states[0].position = leader.position[0];
  states[0].speed = leader.speed[0];
  states[0].accel = leader.accel[0];
  for (std::size_t i = 1; i < nv; ++i) {
    states[i].speed = leader.speed[0];
    states[i].position =
        states[i - 1].position - (params.standstill_l + params.headway_h * states[i].speed);
  }

  RunMetrics metrics;
  metrics.spacing_error.assign(nv, std::vector<double>(steps, 0.0));
  metrics.speed_error.assign(nv, std::vector<double>(steps, 0.0));
  metrics.speed.assign(nv, std::vector<double>(steps, 0.0));
  metrics.outcome_history.resize(steps);
  if (config.record_mode_history) metrics.mode_history.resize(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    if (t >= static_cast<double>(next_period) * config.update_period_tau) {
      period = plan(static_cast<double>(next_period) * config.update_period_tau);
      profile = period.profile;
      ++next_period;
    }

    const DegenerationScenario scenario = sample_link_outcomes(period.ift, profile, rng);
    metrics.outcome_history[k] = scenario.pattern();
    if (config.record_mode_history) {
      metrics.mode_history[k] = receiver_status(scenario.outcome);
    }

    states[0].accel = leader.accel[k];
    for (std::size_t i = 1; i < nv; ++i) {
      metrics.spacing_error[i][k] =
          (states[i - 1].position - states[i].position) -
          (params.standstill_l + params.headway_h * states[i].speed);
      metrics.speed_error[i][k] = states[i - 1].speed - states[i].speed;
    }
    for (std::size_t i = 0; i < nv; ++i) metrics.speed[i][k] = states[i].speed;

    for (std::size_t i = 1; i < nv; ++i) {
      const CommandResult cmd = control_command(static_cast<int>(i), states, scenario.outcome,
                                                params, config, fift_controller);
      states[i].accel = cmd.u;
    }

    // Semi-implicit Euler for followers; the leader replays its trajectory.
    for (std::size_t i = 1; i < nv; ++i) {
      double v = states[i].speed + states[i].accel * config.dt;
      if (v < 0.0) {
        v = 0.0;
        ++metrics.speed_saturation_events;
      }
      states[i].speed = v;
      states[i].position += v * config.dt;
    }
    const std::size_t kn = std::min(k + 1, leader.position.size() - 1);
    states[0].position = leader.position[kn];
    states[0].speed = leader.speed[kn];

    for (std::size_t i = 1; i < nv; ++i) {
      if (states[i - 1].position - states[i].position <= 0.0) {
        throw CollisionError("vehicles " + std::to_string(i - 1) + " and " + std::to_string(i) +
                             " collided at t=" + std::to_string(t + config.dt) +
                             " s; the configuration is unstable");
      }
    }
  }

  metrics.spacing_error_std.resize(nv, 0.0);
  metrics.speed_error_std.resize(nv, 0.0);
  metrics.max_abs_spacing_error.resize(nv, 0.0);
  const double nd = static_cast<double>(steps);
  for (std::size_t i = 0; i < nv; ++i) {
    auto stat = [&](const std::vector<double>& series) {
      double mean = 0.0;
      for (double v : series) mean += v;
      mean /= nd;
      double var = 0.0;
      for (double v : series) var += (v - mean) * (v - mean);
      return std::sqrt(var / nd);
    };
    metrics.spacing_error_std[i] = stat(metrics.spacing_error[i]);
    metrics.speed_error_std[i] = stat(metrics.speed_error[i]);
    double mx = 0.0;
    for (double v : metrics.spacing_error[i]) mx = std::max(mx, std::abs(v));
    metrics.max_abs_spacing_error[i] = mx;
    double mean = 0.0;
    for (double v : metrics.speed[i]) mean += v;
    mean /= nd;
    double energy = 0.0;
    for (double v : metrics.speed[i]) energy += (v - mean) * (v - mean);
    metrics.total_oscillation_energy += energy * config.dt;
  }
  return metrics;
}

OiftPlanner::OiftPlanner(int n_plus_1, TrafficConditions traffic, ContentionCoefficients coeffs,
                         ControllerParams params, TrajectorySpectrum spectrum,
                         OptimizeOptions opts)
    : n_plus_1_(n_plus_1),
      traffic_(std::move(traffic)),
      coeffs_(coeffs),
      params_(params),
      spectrum_(std::move(spectrum)),
      opts_(opts) {}

const OptimizationResult& OiftPlanner::plan() {
  if (!cached_) {
    cached_ = optimize(n_plus_1_, traffic_, coeffs_, params_, spectrum_, opts_);
  }
  return *cached_;
}

RunMetrics run_strategy(const StrategySetup& setup, Strategy strategy, OiftPlanner* planner) {
  SimConfig config = setup.sim;
  config.strategy = strategy;

  auto apply_force = [&](SenderSuccessProfile profile) {
    if (config.force_success_probability) {
      for (std::size_t i = 0; i < profile.parent.size(); ++i) {
        if (profile.parent[i]) profile.p_unsat[i] = *config.force_success_probability;
      }
    }
    return profile;
  };

  std::optional<OiftPlanner> local;
  if (strategy == Strategy::Oift && planner == nullptr) {
    OptimizeOptions opts;
    opts.force_success_probability = config.force_success_probability;
    local.emplace(setup.n_plus_1, setup.traffic, setup.coeffs, setup.params,
                  spectrum_from_trajectory(setup.leader.position, setup.leader.dt), opts);
    planner = &*local;
  }

  PlanFn plan;
  if (strategy == Strategy::Oift) {
    plan = [&, planner](double) {
      const Ift& best = planner->plan().best_ift;
      return PeriodPlan{best,
                        apply_force(build_success_profile(best, setup.traffic, setup.coeffs))};
    };
  } else {
    BitVec bits(static_cast<std::size_t>(setup.n_plus_1), 1);
    bits.back() = 0;
    const Ift full(bits);
    plan = [&, full](double) {
      return PeriodPlan{full,
                        apply_force(build_success_profile(full, setup.traffic, setup.coeffs))};
    };
  }
  return run_platoon(setup.n_plus_1, setup.params, config, setup.leader, plan,
                     strategy == Strategy::Fift);
}

std::vector<StrategySummary> compare_strategies(const StrategySetup& setup,
                                                std::span<const std::uint64_t> seeds,
                                                OiftPlanner* planner, int threads) {
  if (seeds.empty()) throw ValidationError("compare needs at least one seed");
  std::optional<OiftPlanner> local;
  if (planner == nullptr) {
    OptimizeOptions opts;
    opts.threads = threads;
    opts.force_success_probability = setup.sim.force_success_probability;
    local.emplace(setup.n_plus_1, setup.traffic, setup.coeffs, setup.params,
                  spectrum_from_trajectory(setup.leader.position, setup.leader.dt), opts);
    planner = &*local;
  }
  planner->plan();  // resolve once before the workers share it read-only
  std::vector<StrategySummary> out;
  for (Strategy strategy : {Strategy::Oift, Strategy::Dift, Strategy::Fift}) {
    StrategySummary summary;
    summary.strategy = strategy;
    const std::size_t nv = static_cast<std::size_t>(setup.n_plus_1);
    summary.mean_spacing_error_std.assign(nv, 0.0);
    summary.mean_speed_error_std.assign(nv, 0.0);
    summary.mean_max_abs_spacing_error.assign(nv, 0.0);
    std::vector<RunMetrics> runs(seeds.size());
    parallel_for_chunks(seeds.size(), threads, [&](std::size_t begin, std::size_t end) {
      StrategySetup s = setup;
      for (std::size_t r = begin; r < end; ++r) {
        s.sim.seed = seeds[r];
        runs[r] = run_strategy(s, strategy, planner);
      }
    });
    for (const RunMetrics& m : runs) {  // merge in seed order
      for (std::size_t i = 0; i < nv; ++i) {
        summary.mean_spacing_error_std[i] += m.spacing_error_std[i];
        summary.mean_speed_error_std[i] += m.speed_error_std[i];
        summary.mean_max_abs_spacing_error[i] += m.max_abs_spacing_error[i];
      }
      summary.per_seed_total_energy.push_back(m.total_oscillation_energy);
    }
    const double ns = static_cast<double>(seeds.size());
    for (std::size_t i = 0; i < nv; ++i) {
      summary.mean_spacing_error_std[i] /= ns;
      summary.mean_speed_error_std[i] /= ns;
      summary.mean_max_abs_spacing_error[i] /= ns;
    }
    for (double e : summary.per_seed_total_energy) summary.mean_total_energy += e;
    summary.mean_total_energy /= ns;
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace cacc
