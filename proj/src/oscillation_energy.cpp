#include "cacc/oscillation_energy.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "cacc/errors.hpp"

namespace cacc {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_mode_stability(const ControllerParams& params, ControllerMode mode) {
  if (!stability_region_check(params, mode).string_stable) {
    throw ValidationError("scenario_energy: parameter set violates the stability region");
  }
}

}  // namespace

void TrajectorySpectrum::validate() const {
  if (freqs_hz.size() != amps.size()) throw ValidationError("spectrum freq/amp length mismatch");
  double prev = 0.0;
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    if (!(freqs_hz[i] > prev)) {
      throw ValidationError("spectrum frequencies must be positive and strictly increasing");
    }
    prev = freqs_hz[i];
    if (!std::isfinite(amps[i].real()) || !std::isfinite(amps[i].imag())) {
      throw ValidationError("spectrum amplitudes must be finite");
    }
  }
}

TrajectorySpectrum spectrum_from_trajectory(std::span<const double> positions_m, double dt) {
  const std::size_t n = positions_m.size();
  if (n < 64) throw ValidationError("spectrum needs at least 64 samples");
  if (!(dt > 0.0)) throw ValidationError("spectrum needs dt > 0");

  // Remove the line through the first and last samples. The residual then
  // vanishes at both ends, so its periodic extension has no boundary jump;
  // a least-squares line leaves a small ramp whose sawtooth spectrum is
  // amplified without bound by the f^2 speed weighting.
  const double nd = static_cast<double>(n);
  const double slope = (positions_m[n - 1] - positions_m[0]) / ((nd - 1.0) * dt);
  const double offset = positions_m[0];

  std::vector<double> resid(n);
  for (std::size_t k = 0; k < n; ++k) {
    resid[k] = positions_m[k] - (slope * static_cast<double>(k) * dt + offset);
  }

  // Direct DFT of the residual; the grids here are a few thousand samples,
  // computed once per experiment.
  const std::size_t bins = (n - 1) / 2;  // k = 1 .. bins, excludes DC and Nyquist
  TrajectorySpectrum sp;
  sp.freqs_hz.resize(bins);
  sp.amps.resize(bins);
  sp.source_duration = nd * dt;
  sp.source_dt = dt;
  const double scale = std::sqrt(2.0) * dt;  // one-sided energy scaling
  for (std::size_t k = 1; k <= bins; ++k) {
    const double w = kTwoPi * static_cast<double>(k) / nd;
    // Accumulate e^{-j w m} * resid[m] with a recurrence-free loop; cos/sin
    // per sample keeps the round-off independent of bin order.
    double re = 0.0, im = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double ang = w * static_cast<double>(m);
      re += resid[m] * std::cos(ang);
      im -= resid[m] * std::sin(ang);
    }
    sp.freqs_hz[k - 1] = static_cast<double>(k) / (nd * dt);
    sp.amps[k - 1] = std::complex<double>(re * scale, im * scale);
  }
  return sp;
}

void write_spectrum_csv(const TrajectorySpectrum& spectrum, std::ostream& os) {
  os << "freq_hz,re,im\n";
  char line[128];
  for (std::size_t i = 0; i < spectrum.freqs_hz.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g\n", spectrum.freqs_hz[i],
                  spectrum.amps[i].real(), spectrum.amps[i].imag());
    os << line;
  }
}

ScenarioEnergyModel::ScenarioEnergyModel(const ControllerParams& params,
                                         const TrajectorySpectrum& spectrum) {
  spectrum.validate();
  for (ControllerMode mode : {ControllerMode::Cacc1, ControllerMode::Cacc2,
                              ControllerMode::Cacc3, ControllerMode::Acc}) {
    check_mode_stability(params, mode);
  }
  const std::size_t bins = spectrum.freqs_hz.size();
  if (bins < 2) throw ValidationError("spectrum needs at least two bins");
  for (int m = 0; m < 4; ++m) {
    g1_[m].resize(bins);
    g2_[m].resize(bins);
    const auto mode = static_cast<ControllerMode>(m + 1);
    for (std::size_t k = 0; k < bins; ++k) {
      const LinkGains g = link_gains(params, mode, kTwoPi * spectrum.freqs_hz[k]);
      g1_[m][k] = g.g1;
      g2_[m][k] = g.g2;
    }
  }
  weight_.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    double dw;
    if (k == 0) {
      dw = (spectrum.freqs_hz[1] - spectrum.freqs_hz[0]) / 2.0;
    } else if (k + 1 == bins) {
      dw = (spectrum.freqs_hz[k] - spectrum.freqs_hz[k - 1]) / 2.0;
    } else {
      dw = (spectrum.freqs_hz[k + 1] - spectrum.freqs_hz[k - 1]) / 2.0;
    }
    const double f = spectrum.freqs_hz[k];
    weight_[k] = 4.0 * std::numbers::pi * std::numbers::pi * dw * f * f *
                 std::norm(spectrum.amps[k]);
  }
}

double ScenarioEnergyModel::leader_energy() const {
  double e = 0.0;
  for (double w : weight_) e += w;
  return e;
}

double ScenarioEnergyModel::energy_from_outcome(std::uint32_t outcome_pattern,
                                                int n_plus_1) const {
  const std::size_t bins = weight_.size();
  double total = leader_energy();
  if (n_plus_1 < 2) return total;
  // Per-vehicle modes from the outcome pattern, then the propagation
  // recursion per bin; vehicle 1 has no second-predecessor path.
  std::vector<int> mode(static_cast<std::size_t>(n_plus_1));
  for (int i = 1; i < n_plus_1; ++i) {
    mode[static_cast<std::size_t>(i)] = static_cast<int>(receiver_mode(outcome_pattern, i)) - 1;
  }
  for (std::size_t k = 0; k < bins; ++k) {
    std::complex<double> prev2(0.0, 0.0);
    std::complex<double> prev1(1.0, 0.0);
    double mag_sum = 0.0;
    for (int i = 1; i < n_plus_1; ++i) {
      const int m = mode[static_cast<std::size_t>(i)];
      std::complex<double> ss = g1_[m][k] * prev1;
      if (i >= 2) ss += g2_[m][k] * prev2;
      mag_sum += std::norm(ss);
      prev2 = prev1;
      prev1 = ss;
    }
    total += weight_[k] * mag_sum;
  }
  return total;
}

double ScenarioEnergyModel::energy(const ReceiverStatus& zeta) const {
  const int n = static_cast<int>(zeta.size());
  if (n < 1) throw ValidationError("energy needs at least one vehicle");
  const std::size_t bins = weight_.size();
  double total = leader_energy();
  for (std::size_t k = 0; k < bins; ++k) {
    std::complex<double> prev2(0.0, 0.0);
    std::complex<double> prev1(1.0, 0.0);
    double mag_sum = 0.0;
    for (int i = 1; i < n; ++i) {
      const int m = static_cast<int>(zeta[static_cast<std::size_t>(i)]) - 1;
      std::complex<double> ss = g1_[m][k] * prev1;
      if (i >= 2) ss += g2_[m][k] * prev2;
      mag_sum += std::norm(ss);
      prev2 = prev1;
      prev1 = ss;
    }
    total += weight_[k] * mag_sum;
  }
  return total;
}

double scenario_energy(const ReceiverStatus& zeta, const TrajectorySpectrum& spectrum,
                       const ControllerParams& params) {
  if (zeta.empty()) throw ValidationError("scenario_energy needs at least one vehicle");
  spectrum.validate();
  for (ControllerMode mode : zeta) check_mode_stability(params, mode);
  if (spectrum.freqs_hz.empty()) return 0.0;
  if (spectrum.freqs_hz.size() < 2) {
    throw ValidationError("scenario_energy needs at least two spectrum bins");
  }
  const ScenarioEnergyModel model(params, spectrum);
  return model.energy(zeta);
}

}  // namespace cacc
