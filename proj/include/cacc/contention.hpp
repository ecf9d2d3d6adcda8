#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cacc/ift.hpp"

namespace cacc {

// Ambient conditions that drive broadcast contention.
struct TrafficConditions {
  double density_kbar = 28.57;  // vehicles per km
  double comm_range_r = 0.2;    // km
  int contention_window = 8;    // slot count

  // Vehicles within communication range on each side: floor(R * kbar).
  int band_m() const;
  void validate() const;
};

// Fitting coefficients for the unsaturated-traffic correction
// p_unsat = (k1*ln(rho) + k2*CW + k3) * p_sat.
struct ContentionCoefficients {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 1.0;
};

// Shipped defaults: least-squares fit of the slot-level Monte-Carlo at
// CW=8 over rho in [1,12] (k2 is not identifiable from a single CW and is
// pinned to 0 there).
ContentionCoefficients default_coefficients();

// Throws ValidationError if the unclamped p_unsat leaves (0, 1] anywhere on
// integer rho in [1, rho_max].
void validate_coefficients(const ContentionCoefficients& c, int cw, int rho_max);

// Per-sender success data for one topology.
struct SenderSuccessProfile {
  BitVec parent;                // activation vector the profile was built for
  std::vector<double> rho_bar;  // active senders within range, self included
  std::vector<double> p_sat;
  std::vector<double> p_unsat;  // zero for entries where rho < 1 (never used)
};

// rho_i = number of active senders j with |i-j| <= m, self included.
std::vector<double> active_neighbors(const Ift& ift, const TrafficConditions& traffic);

// Success probability of an always-backlogged sender: fixed point of
//   p = 2(1-b)/(1-2b+CW),  b = 1-exp(-rho*p)
// found by bisection on b in [0,1) to residual 1e-10. rho = 0 gives the
// closed form 2/(1+CW).
double saturated_success(double rho_bar, int cw);

// Per-attempt success probability under periodic message generation.
// Clamped to [1e-9, 1]; *clamped (when given) reports that the calibration
// left the probability range. rho_bar < 1 is a domain error.
double unsaturated_success(double rho_bar, int cw, const ContentionCoefficients& coeffs,
                           bool* clamped = nullptr);

SenderSuccessProfile build_success_profile(const Ift& ift, const TrafficConditions& traffic,
                                           const ContentionCoefficients& coeffs);

// Probability that exactly this outcome is realized: product of p over
// succeeding active senders times (1-p) over failing ones.
double scenario_probability(const DegenerationScenario& scenario,
                            const SenderSuccessProfile& profile);

// ---- calibration of k1,k2,k3 against a slot-level broadcast simulation ----

struct CalibrationPoint {
  double rho_bar;
  int cw;
  double p_sat;
  double p_unsat_sim;  // Monte-Carlo estimate
  double p_unsat_fit;  // fitted model, clamped to [0,1]
};

struct CalibrationResult {
  ContentionCoefficients coeffs;
  std::vector<CalibrationPoint> table;
  double mean_error = 0.0;  // mean of (fit - sim)
  double std_error = 0.0;
};

struct CalibrationOptions {
  std::vector<int> cw_values = {8};
  int rho_min = 1;
  int rho_max = 12;
  int trials = 200000;
  std::uint64_t seed = 20190724;
  double slot_time_s = 16e-6;
  double generation_interval_s = 0.1;
};

// Each of rho senders draws a uniform slot in [0, CW-1]; a sender succeeds
// iff its slot is unique and the slot start precedes the next message
// generation deadline. The ratio p_sim/p_sat is fitted by least squares,
// constrained so the fitted p_unsat never exceeds 1 on the fitted range.
CalibrationResult calibrate_coefficients(const CalibrationOptions& opts = {});

// CSV with header rho_bar,cw,p_sat,p_unsat_simulated,p_unsat_fitted.
void write_calibration_csv(const CalibrationResult& result, std::ostream& os);

}  // namespace cacc
