#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include "cacc/freq_control.hpp"
#include "cacc/ift.hpp"

namespace cacc {

// One-sided oscillation spectrum of a trajectory. Amplitudes are scaled so
// that the speed-energy identity holds: the integral over the grid of
// 4*pi^2*f^2*|amps|^2 equals the time-domain integral of the detrended
// speed squared.
struct TrajectorySpectrum {
  std::vector<double> freqs_hz;        // strictly increasing, positive
  std::vector<std::complex<double>> amps;
  double source_duration = 0.0;        // s
  double source_dt = 0.0;              // s

  void validate() const;
};

// Removes the linear trend (standstill offset and mean drift, taken as the
// line through the endpoints so the residual closes periodically) and
// transforms the residual. Positive-frequency bins only; DC and Nyquist are
// dropped. Needs at least 64 samples.
TrajectorySpectrum spectrum_from_trajectory(std::span<const double> positions_m, double dt);

// CSV with header freq_hz,re,im.
void write_spectrum_csv(const TrajectorySpectrum& spectrum, std::ostream& os);

// Platoon speed-oscillation energy for one receiver-status assignment:
//   E = 4*pi^2 * sum_i integral f^2 |SS_i(j*2*pi*f)|^2 |X0(f)|^2 df
// using trapezoidal quadrature on the spectrum's own grid. Refuses
// parameter sets that violate the stability region of any mode present.
double scenario_energy(const ReceiverStatus& zeta, const TrajectorySpectrum& spectrum,
                       const ControllerParams& params);

// Precomputed per-mode link gains on a spectrum grid. Lets the optimizer
// evaluate many scenarios against one spectrum without re-deriving the
// transfer functions.
class ScenarioEnergyModel {
 public:
  ScenarioEnergyModel(const ControllerParams& params, const TrajectorySpectrum& spectrum);

  double energy(const ReceiverStatus& zeta) const;
  // Receiver statuses derived directly from a sender-outcome bit pattern.
  double energy_from_outcome(std::uint32_t outcome_pattern, int n_plus_1) const;
  double leader_energy() const;
  std::size_t grid_size() const { return weight_.size(); }

 private:
  std::array<std::vector<std::complex<double>>, 4> g1_;
  std::array<std::vector<std::complex<double>>, 4> g2_;
  std::vector<double> weight_;  // 4*pi^2 * trapezoid weight * f^2 * |X0|^2
};

}  // namespace cacc
