#include "cacc/contention.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "cacc/errors.hpp"

namespace cacc {
namespace {

constexpr double kResidualTol = 1e-10;
constexpr double kUnsatFloor = 1e-9;

double fixed_point_residual(double b, double rho, int cw) {
  const double p = 2.0 * (1.0 - b) / (1.0 - 2.0 * b + cw);
  return b - (1.0 - std::exp(-rho * p));
}

// Solve min ||A x - y||^2 for a 2- or 3-column design matrix, optionally
// with one active equality constraint c^T x = d (KKT system, Gaussian
// elimination with partial pivoting; the systems here are at most 4x4).
std::vector<double> solve_least_squares(const std::vector<std::vector<double>>& a,
                                        const std::vector<double>& y,
                                        const std::vector<double>* constraint = nullptr,
                                        double constraint_rhs = 0.0) {
  const std::size_t rows = a.size();
  const std::size_t p = a.front().size();
  const std::size_t dim = p + (constraint ? 1 : 0);
  std::vector<std::vector<double>> m(dim, std::vector<double>(dim + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += a[r][i] * a[r][j];
      m[i][j] = s;
    }
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += a[r][i] * y[r];
    m[i][dim] = s;
  }
  if (constraint) {
    for (std::size_t i = 0; i < p; ++i) {
      m[i][p] = (*constraint)[i];
      m[p][i] = (*constraint)[i];
    }
    m[p][dim] = constraint_rhs;
  }
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dim; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-14) throw NumericalError("calibration fit is singular");
    std::swap(m[col], m[pivot]);
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (std::size_t cidx = col; cidx <= dim; ++cidx) m[r][cidx] -= f * m[col][cidx];
    }
  }
  std::vector<double> x(p);
  for (std::size_t i = 0; i < p; ++i) x[i] = m[i][dim] / m[i][i];
  return x;
}

}  // namespace

int TrafficConditions::band_m() const {
  return static_cast<int>(std::floor(comm_range_r * density_kbar));
}

void TrafficConditions::validate() const {
  if (!(density_kbar > 0.0)) throw ValidationError("traffic.density_kbar must be > 0");
  if (!(comm_range_r > 0.0)) throw ValidationError("traffic.comm_range_r_km must be > 0");
  if (contention_window < 2) throw ValidationError("traffic.contention_window must be >= 2");
}

ContentionCoefficients default_coefficients() {
  // Frozen output of calibrate_coefficients() with default options; see
  // the regression test that re-derives them.
  return ContentionCoefficients{-0.7013696972119877, 0.0, 5.236473435769227};
}

std::vector<double> active_neighbors(const Ift& ift, const TrafficConditions& traffic) {
  traffic.validate();
  const int n = ift.size();
  const int m = traffic.band_m();
  std::vector<double> rho(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - m);
    const int hi = std::min(n - 1, i + m);
    int count = 0;
    for (int j = lo; j <= hi; ++j) count += ift.active(j) ? 1 : 0;
    rho[static_cast<std::size_t>(i)] = count;
  }
  return rho;
}

double saturated_success(double rho_bar, int cw) {
  if (rho_bar < 0.0) throw ValidationError("rho_bar must be >= 0");
  if (cw < 2) throw ValidationError("contention window must be >= 2");
  if (rho_bar == 0.0) return 2.0 / (1.0 + cw);
  double lo = 0.0;
  double hi = 1.0;
  // f(0) <= 0 and f(1) = 1 > 0, so the root is bracketed.
  double mid = 0.0;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = fixed_point_residual(mid, rho_bar, cw);
    if (std::abs(f) < kResidualTol) {
      return 2.0 * (1.0 - mid) / (1.0 - 2.0 * mid + cw);
    }
    if (f > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw NumericalError("saturated_success: fixed point did not converge");
}

double unsaturated_success(double rho_bar, int cw, const ContentionCoefficients& coeffs,
                           bool* clamped) {
  if (rho_bar < 1.0) throw ValidationError("unsaturated_success needs rho_bar >= 1");
  const double p_sat = saturated_success(rho_bar, cw);
  const double ratio = coeffs.k1 * std::log(rho_bar) + coeffs.k2 * cw + coeffs.k3;
  double p = ratio * p_sat;
  bool hit = false;
  if (p < kUnsatFloor) {
    p = kUnsatFloor;
    hit = true;
  } else if (p > 1.0) {
    p = 1.0;
    hit = true;
  }
  if (clamped) *clamped = hit;
  return p;
}

void validate_coefficients(const ContentionCoefficients& c, int cw, int rho_max) {
  for (int rho = 1; rho <= std::max(1, rho_max); ++rho) {
    const double p_sat = saturated_success(rho, cw);
    const double p = (c.k1 * std::log(static_cast<double>(rho)) + c.k2 * cw + c.k3) * p_sat;
    if (!(p > 0.0) || p > 1.0 + 1e-9) {
      throw ValidationError("contention coefficients give p_unsat outside (0,1] at rho=" +
                            std::to_string(rho));
    }
  }
}

SenderSuccessProfile build_success_profile(const Ift& ift, const TrafficConditions& traffic,
                                           const ContentionCoefficients& coeffs) {
  SenderSuccessProfile profile;
  profile.parent = ift.bits();
  profile.rho_bar = active_neighbors(ift, traffic);
  const std::size_t n = profile.rho_bar.size();
  profile.p_sat.resize(n);
  profile.p_unsat.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    profile.p_sat[i] = saturated_success(profile.rho_bar[i], traffic.contention_window);
    profile.p_unsat[i] =
        profile.rho_bar[i] >= 1.0
            ? unsaturated_success(profile.rho_bar[i], traffic.contention_window, coeffs)
            : 0.0;
  }
  return profile;
}

double scenario_probability(const DegenerationScenario& scenario,
                            const SenderSuccessProfile& profile) {
  if (scenario.parent != profile.parent) {
    throw ValidationError("scenario does not belong to the profile's topology");
  }
  double p = 1.0;
  for (std::size_t i = 0; i < scenario.parent.size(); ++i) {
    if (!scenario.parent[i]) continue;
    p *= scenario.outcome[i] ? profile.p_unsat[i] : (1.0 - profile.p_unsat[i]);
  }
  return p;
}

CalibrationResult calibrate_coefficients(const CalibrationOptions& opts) {
  if (opts.cw_values.empty()) throw ValidationError("calibration needs at least one CW");
  if (opts.rho_min < 1 || opts.rho_max < opts.rho_min) {
    throw ValidationError("calibration rho range must satisfy 1 <= rho_min <= rho_max");
  }
  if (opts.trials < 1) throw ValidationError("calibration needs trials >= 1");

  std::mt19937_64 rng(opts.seed);
  CalibrationResult result;

  // Monte-Carlo success rates per (rho, cw).
  for (int cw : opts.cw_values) {
    if (cw < 2) throw ValidationError("contention window must be >= 2");
    std::uniform_int_distribution<int> slot(0, cw - 1);
    std::vector<int> slots;
    std::vector<int> hits(static_cast<std::size_t>(cw));
    for (int rho = opts.rho_min; rho <= opts.rho_max; ++rho) {
      long long successes = 0;
      for (int t = 0; t < opts.trials; ++t) {
        slots.assign(static_cast<std::size_t>(rho), 0);
        std::fill(hits.begin(), hits.end(), 0);
        for (int s = 0; s < rho; ++s) {
          const int v = slot(rng);
          slots[static_cast<std::size_t>(s)] = v;
          ++hits[static_cast<std::size_t>(v)];
        }
        for (int s = 0; s < rho; ++s) {
          const int v = slots[static_cast<std::size_t>(s)];
          const bool unique = hits[static_cast<std::size_t>(v)] == 1;
          const bool in_time = v * opts.slot_time_s < opts.generation_interval_s;
          if (unique && in_time) ++successes;
        }
      }
      CalibrationPoint pt;
      pt.rho_bar = rho;
      pt.cw = cw;
      pt.p_sat = saturated_success(rho, cw);
      pt.p_unsat_sim =
          static_cast<double>(successes) / (static_cast<double>(opts.trials) * rho);
      pt.p_unsat_fit = 0.0;
      result.table.push_back(pt);
    }
  }

  // Least squares on p_unsat directly: target p_sim, regressors
  // ln(rho)*p_sat [, cw*p_sat] and p_sat. With one CW the cw column is
  // collinear with the intercept column, so k2 is pinned to 0.
  const bool multi_cw = opts.cw_values.size() > 1;
  std::vector<std::vector<double>> a;
  std::vector<double> y;
  for (const auto& pt : result.table) {
    std::vector<double> row{std::log(pt.rho_bar) * pt.p_sat};
    if (multi_cw) row.push_back(pt.cw * pt.p_sat);
    row.push_back(pt.p_sat);
    a.push_back(std::move(row));
    y.push_back(pt.p_unsat_sim);
  }
  auto unpack = [&](const std::vector<double>& x) {
    ContentionCoefficients c;
    c.k1 = x[0];
    c.k2 = multi_cw ? x[1] : 0.0;
    c.k3 = multi_cw ? x[2] : x[1];
    return c;
  };
  ContentionCoefficients coeffs = unpack(solve_least_squares(a, y));

  // Keep the fitted probability inside (0,1]: if the fit exceeds 1 anywhere
  // on the fitted range, re-solve with equality at the worst point.
  for (int pass = 0; pass < 2; ++pass) {
    double worst = 1.0;
    std::size_t worst_idx = 0;
    for (std::size_t i = 0; i < result.table.size(); ++i) {
      const auto& pt = result.table[i];
      const double fit =
          (coeffs.k1 * std::log(pt.rho_bar) + coeffs.k2 * pt.cw + coeffs.k3) * pt.p_sat;
      if (fit > worst) {
        worst = fit;
        worst_idx = i;
      }
    }
    if (worst <= 1.0 + 1e-12) break;
    coeffs = unpack(solve_least_squares(a, y, &a[worst_idx], 1.0));
  }

  double sum = 0.0;
  for (auto& pt : result.table) {
    const double fit =
        (coeffs.k1 * std::log(pt.rho_bar) + coeffs.k2 * pt.cw + coeffs.k3) * pt.p_sat;
    pt.p_unsat_fit = std::clamp(fit, 0.0, 1.0);
    sum += pt.p_unsat_fit - pt.p_unsat_sim;
  }
  result.mean_error = sum / static_cast<double>(result.table.size());
  double var = 0.0;
  for (const auto& pt : result.table) {
    const double d = (pt.p_unsat_fit - pt.p_unsat_sim) - result.mean_error;
    var += d * d;
  }
  result.std_error = std::sqrt(var / static_cast<double>(result.table.size()));
  result.coeffs = coeffs;
  return result;
}

void write_calibration_csv(const CalibrationResult& result, std::ostream& os) {
  os << "rho_bar,cw,p_sat,p_unsat_simulated,p_unsat_fitted\n";
  char line[160];
  for (const auto& pt : result.table) {
    std::snprintf(line, sizeof(line), "%.6g,%d,%.9g,%.9g,%.9g\n", pt.rho_bar, pt.cw, pt.p_sat,
                  pt.p_unsat_sim, pt.p_unsat_fit);
    os << line;
  }
}

}  // namespace cacc
