#include "cacc/freq_control.hpp"

#include <cmath>
#include <ostream>

#include "cacc/errors.hpp"

namespace cacc {
namespace {

constexpr double kSqrt2 = 1.4142135623730951;
// -3.01 dB expressed as a power ratio.
const double kCutoffPower = std::pow(10.0, -3.01 / 10.0);

}  // namespace

void ControllerParams::validate() const {
  if (!(headway_h > 0.0)) throw ValidationError("controller.headway_h must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0)) {
    throw ValidationError("controller.alpha and beta must lie in (0,1)");
  }
  if (std::abs(alpha + beta - 1.0) > 1e-9) {
    throw ValidationError("controller.alpha + beta must equal 1");
  }
  for (int m = 0; m < 4; ++m) {
    if (!(omega_k[m] > 0.0)) throw ValidationError("controller.omega_k entries must be > 0");
    if (headway_h * omega_k[m] > w_max + 1e-9) {
      throw ValidationError("controller: h*omega_k exceeds the noise bound w_max");
    }
  }
  const double acc = headway_h * omega(ControllerMode::Acc);
  if (acc < kSqrt2 - 1e-9) {
    throw ValidationError("controller: h*omega_k for ACC must be >= sqrt(2)");
  }
  if (!(standstill_l > 0.0)) throw ValidationError("controller.standstill_l must be > 0");
}

ModeCoefficients mode_coefficients(ControllerMode mode, double alpha, double beta) {
  switch (mode) {
    case ControllerMode::Cacc1:
      return {alpha, beta, alpha, beta};
    case ControllerMode::Cacc2:
      return {1.0, 0.0, 1.0, 0.0};
    case ControllerMode::Cacc3:
      // Feedback tracks the sensed immediate predecessor; feedforward uses
      // the heard second predecessor.
      return {1.0, 0.0, 0.0, 1.0};
    case ControllerMode::Acc:
      return {1.0, 0.0, 0.0, 0.0};
  }
  throw ValidationError("invalid controller mode");
}

ModeCoefficients mode_coefficients(ControllerMode mode, const ControllerParams& params) {
  return mode_coefficients(mode, params.alpha, params.beta);
}

ComponentResponse component_responses(const ControllerParams& params, ControllerMode mode,
                                      double omega) {
  if (!(omega > 0.0)) throw ValidationError("component_responses needs omega > 0");
  const Complex s(0.0, omega);
  const ModeCoefficients mc = mode_coefficients(mode, params);
  ComponentResponse r;
  r.g = 1.0 / (s * s);
  r.h = 1.0 + (2.0 - mc.alpha_b) * params.headway_h * s;
  const double wk = params.omega(mode);
  r.k = wk * (wk + s);
  r.f = 1.0 / r.h;
  return r;
}

LinkGains link_gains(const ControllerParams& params, ControllerMode mode, double omega) {
  const ComponentResponse c = component_responses(params, mode, omega);
  const ModeCoefficients mc = mode_coefficients(mode, params);
  const Complex s(0.0, omega);
  const Complex den = 1.0 + c.g * c.k * c.h;
  const Complex lambda_b = c.g * c.k / den;
  const Complex lambda_f = c.g * c.f * s * s / den;
  return LinkGains{mc.alpha_f * lambda_f + mc.alpha_b * lambda_b,
                   mc.beta_f * lambda_f + mc.beta_b * lambda_b};
}

std::vector<FrequencyResponse> platoon_transfer(const ControllerParams& params,
                                                const ReceiverStatus& zeta,
                                                std::span<const double> grid) {
  const int n = static_cast<int>(zeta.size());
  if (n < 1) throw ValidationError("platoon_transfer needs at least one vehicle");
  for (double w : grid) {
    if (!(w > 0.0)) throw ValidationError("platoon_transfer grid must be positive");
  }
  std::vector<FrequencyResponse> out(static_cast<std::size_t>(n));
  for (auto& fr : out) {
    fr.grid.assign(grid.begin(), grid.end());
    fr.values.resize(grid.size());
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Complex prev2(0.0, 0.0);
    Complex prev1(1.0, 0.0);  // leader
    out[0].values[k] = prev1;
    for (int i = 1; i < n; ++i) {
      const LinkGains g = link_gains(params, zeta[static_cast<std::size_t>(i)], grid[k]);
      Complex ss = g.g1 * prev1;
      if (i >= 2) ss += g.g2 * prev2;
      out[static_cast<std::size_t>(i)].values[k] = ss;
      prev2 = prev1;
      prev1 = ss;
    }
  }
  return out;
}

StabilityReport stability_region_check(const ControllerParams& params, ControllerMode mode) {
  StabilityReport rep;
  const double hwk = params.headway_h * params.omega(mode);
  rep.noise_margin = params.w_max - hwk;
  rep.noise_bound_ok = rep.noise_margin >= 0.0;
  if (mode == ControllerMode::Acc) {
    rep.stability_margin = hwk - kSqrt2;
    rep.string_stable = rep.stability_margin >= 0.0;
  } else {
    rep.stability_margin = params.headway_h;
    rep.string_stable = params.headway_h > 0.0;
  }
  return rep;
}

NoiseAttenuation noise_attenuation(const ControllerParams& params, ControllerMode mode,
                                   double omega) {
  const ComponentResponse c = component_responses(params, mode, omega);
  const ModeCoefficients mc = mode_coefficients(mode, params);
  const Complex hgk = c.h * c.g * c.k;
  const Complex t = hgk / (1.0 + hgk);
  return NoiseAttenuation{std::abs(mc.alpha_b * t), std::abs(mc.beta_b * t)};
}

double cutoff_frequency(const ControllerParams& params, ControllerMode mode) {
  const StabilityReport rep = stability_region_check(params, mode);
  if (!rep.string_stable) {
    throw ValidationError("cutoff_frequency requires a string-stable mode");
  }
  const double c = kCutoffPower;
  const double h = params.headway_h;
  switch (mode) {
    case ControllerMode::Cacc1: {
      const double f = 2.0 - params.alpha;
      return std::sqrt((1.0 - c) / (f * f * c * h * h));
    }
    case ControllerMode::Cacc2:
    case ControllerMode::Cacc3:
      return std::sqrt((1.0 - c) / (c * h * h));
    case ControllerMode::Acc: {
      const double wk = params.omega(ControllerMode::Acc);
      const double a = 1.0 + h * wk;
      const double wk2 = wk * wk;
      const double b = c * (wk + h * wk2) * (wk + h * wk2) - 2.0 * c * wk2 * a - wk2;
      const double disc = b * b - 4.0 * c * a * a * (wk2 * wk2 * (c - 1.0));
      if (disc < 0.0) throw NumericalError("cutoff_frequency: negative discriminant");
      // Positive root of c*a^2*z^2 + b*z + (c-1)*wk^4 = 0 with z = omega^2.
      const double z = (-b + std::sqrt(disc)) / (2.0 * c * a * a);
      if (!(z > 0.0)) throw NumericalError("cutoff_frequency: no positive crossing");
      return std::sqrt(z);
    }
  }
  throw ValidationError("invalid controller mode");
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ValidationError("bad log grid");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double step = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  return g;
}

std::vector<double> default_analysis_grid() { return log_grid(1e-3, 1e3, 2048); }

void write_response_csv(const FrequencyResponse& fr, std::ostream& os) {
  os << "omega,re,im,magnitude_db\n";
  char line[160];
  for (std::size_t i = 0; i < fr.grid.size(); ++i) {
    const double mag = std::abs(fr.values[i]);
    std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g\n", fr.grid[i], fr.values[i].real(),
                  fr.values[i].imag(), 20.0 * std::log10(mag));
    os << line;
  }
}

}  // namespace cacc
