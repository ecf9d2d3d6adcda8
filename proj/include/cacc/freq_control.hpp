#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include "cacc/ift.hpp"

namespace cacc {

using Complex = std::complex<double>;

// Adaptive PD controller parameters shared by every vehicle. omega_k holds
// the PD cut-off frequency per controller mode (CACC1, CACC2, CACC3, ACC).
struct ControllerParams {
  double headway_h = 1.0;  // s
  std::array<double, 4> omega_k = {0.8, 0.8, 0.9, 1.45};
  double alpha = 0.7;
  double beta = 0.3;
  double w_max = 2.0;       // noise-attenuation bound on h*omega_k
  double standstill_l = 5.0;  // m, includes vehicle length

  double omega(ControllerMode m) const { return omega_k[static_cast<int>(m) - 1]; }
  void validate() const;
};

// Weights applied to position feedback (b) and acceleration feedforward (f)
// from the immediate (alpha) and second (beta) predecessor.
struct ModeCoefficients {
  double alpha_b, beta_b, alpha_f, beta_f;
};

ModeCoefficients mode_coefficients(ControllerMode mode, double alpha, double beta);
ModeCoefficients mode_coefficients(ControllerMode mode, const ControllerParams& params);

// Component transfer functions at s = j*omega: the double-integrator plant
// G = 1/s^2, the CTH spacing policy H = 1 + (2-alpha_b)hs, the PD gain
// K = wk(wk+s) and the feedforward filter F = 1/H.
struct ComponentResponse {
  Complex g, h, k, f;
};
ComponentResponse component_responses(const ControllerParams& params, ControllerMode mode,
                                      double omega);

// Per-link gains of the trajectory-propagation recursion:
//   SS_i = g1 * SS_{i-1} + g2 * SS_{i-2}
// with g1 = af*Lf + ab*Lb and g2 = bf*Lf + bb*Lb, where
// Lb = GK/(1+GKH) and Lf = GFs^2/(1+GKH).
struct LinkGains {
  Complex g1, g2;
};
LinkGains link_gains(const ControllerParams& params, ControllerMode mode, double omega);

struct FrequencyResponse {
  std::vector<double> grid;  // rad/s, strictly increasing
  std::vector<Complex> values;
};

// Trajectory-oscillation transfer of every vehicle relative to the leader,
// evaluated pointwise on the grid. Vehicle 1 has no second predecessor, so
// its g2 path is removed.
std::vector<FrequencyResponse> platoon_transfer(const ControllerParams& params,
                                                const ReceiverStatus& zeta,
                                                std::span<const double> grid);

struct StabilityReport {
  bool string_stable = false;
  double stability_margin = 0.0;  // signed distance to the binding bound
  bool noise_bound_ok = false;    // h*omega_k <= w_max
  double noise_margin = 0.0;
};

// CACC modes are string stable for any h > 0; ACC requires h*omega_k >=
// sqrt(2). Also reports the measurement-noise bound h*omega_k <= w_max.
StabilityReport stability_region_check(const ControllerParams& params, ControllerMode mode);

struct NoiseAttenuation {
  double t1_mag, t2_mag;
};

// Magnitudes of the complementary sensitivities that map predecessor
// measurement noise into the processed position output. Their
// high-frequency limits are alpha_b*h*wk/(1+h*wk) and beta_b*h*wk/(1+h*wk).
NoiseAttenuation noise_attenuation(const ControllerParams& params, ControllerMode mode,
                                   double omega);

// -3.01 dB corner frequency of the single-link transfer for the mode.
// Requires the mode to pass stability_region_check.
double cutoff_frequency(const ControllerParams& params, ControllerMode mode);

// n logarithmically spaced points over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

// Default stability-sweep grid: 2048 points over [1e-3, 1e3] rad/s.
std::vector<double> default_analysis_grid();

// CSV with header omega,re,im,magnitude_db.
void write_response_csv(const FrequencyResponse& fr, std::ostream& os);

}  // namespace cacc
