#include "cacc/optimizer.hpp"

#include <bit>
#include <chrono>
#include <cmath>

#include "cacc/errors.hpp"
#include "cacc/parallel.hpp"

namespace cacc {
namespace {

// Total order on candidates: lower energy, then fewer active senders, then
// lexicographically smaller bit string (leader-first reading).
bool better(double e_a, std::uint32_t mask_a, double e_b, std::uint32_t mask_b, int n) {
  if (e_a != e_b) return e_a < e_b;
  const int pop_a = std::popcount(mask_a);
  const int pop_b = std::popcount(mask_b);
  if (pop_a != pop_b) return pop_a < pop_b;
  for (int i = 0; i < n; ++i) {
    const std::uint32_t ba = (mask_a >> i) & 1u;
    const std::uint32_t bb = (mask_b >> i) & 1u;
    if (ba != bb) return ba < bb;
  }
  return false;
}

struct CandidateEval {
  double energy;
  std::uint64_t lookups;
};

// Expected energy of one topology mask: enumerate its outcomes by counting
// over the active bit positions, weight each table entry by the outcome
// probability.
CandidateEval evaluate_candidate(std::uint32_t mask, int n_plus_1,
                                 const TrafficConditions& traffic,
                                 const ContentionCoefficients& coeffs, const EnergyTable& table,
                                 const std::optional<double>& forced_p) {
  const Ift ift(pattern_to_bits(mask, n_plus_1));
  const SenderSuccessProfile profile = build_success_profile(ift, traffic, coeffs);
  std::vector<int> active;
  std::vector<double> p;
  for (int i = 0; i < n_plus_1; ++i) {
    if ((mask >> i) & 1u) {
      active.push_back(i);
      p.push_back(forced_p ? *forced_p : profile.p_unsat[static_cast<std::size_t>(i)]);
    }
  }
  const std::size_t outcomes = std::size_t{1} << active.size();
  double expected = 0.0;
  for (std::size_t d = 0; d < outcomes; ++d) {
    std::uint32_t pattern = 0;
    double prob = 1.0;
    for (std::size_t j = 0; j < active.size(); ++j) {
      if ((d >> j) & 1u) {
        pattern |= 1u << active[j];
        prob *= p[j];
      } else {
        prob *= 1.0 - p[j];
      }
    }
    expected += prob * table.at(pattern);
  }
  return CandidateEval{expected, outcomes};
}

}  // namespace

double EnergyTable::at(std::uint32_t outcome_pattern) const {
  if (outcome_pattern >= energies.size()) {
    throw IntegrityError("energy table has no entry for outcome pattern " +
                         std::to_string(outcome_pattern));
  }
  return energies[outcome_pattern];
}

EnergyTable build_energy_table(int n_plus_1, const ControllerParams& params,
                               const TrajectorySpectrum& spectrum, const OptimizeOptions& opts) {
  if (n_plus_1 < 2) throw ValidationError("energy table needs a platoon of at least 2");
  if (n_plus_1 > opts.platoon_limit) {
    throw ValidationError("platoon size " + std::to_string(n_plus_1) +
                          " exceeds the configured limit of " + std::to_string(opts.platoon_limit) +
                          " (table grows as 2^N)");
  }
  const ScenarioEnergyModel model(params, spectrum);
  EnergyTable table;
  table.n_plus_1 = n_plus_1;
  table.energies.resize(std::size_t{1} << (n_plus_1 - 1));
  parallel_for_chunks(table.energies.size(), opts.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t pattern = begin; pattern < end; ++pattern) {
      table.energies[pattern] =
          model.energy_from_outcome(static_cast<std::uint32_t>(pattern), n_plus_1);
    }
  });
  return table;
}

double expected_energy(const Ift& ift, const EnergyTable& table,
                       std::span<const double> scenario_probs) {
  const auto scenarios = enumerate_degenerations(ift);
  if (scenarios.size() != scenario_probs.size()) {
    throw ValidationError("scenario probability count does not match the degeneration set");
  }
  double total_prob = 0.0;
  for (double p : scenario_probs) total_prob += p;
  if (std::abs(total_prob - 1.0) > 1e-9) {
    throw ValidationError("scenario probabilities must sum to 1");
  }
  double expected = 0.0;
  for (std::size_t d = 0; d < scenarios.size(); ++d) {
    expected += scenario_probs[d] * table.at(scenarios[d].pattern());
  }
  return expected;
}

OptimizationResult optimize(int n_plus_1, const TrafficConditions& traffic,
                            const ContentionCoefficients& coeffs, const ControllerParams& params,
                            const TrajectorySpectrum& spectrum, const OptimizeOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  traffic.validate();
  const EnergyTable table = build_energy_table(n_plus_1, params, spectrum, opts);

  const std::size_t count = std::size_t{1} << (n_plus_1 - 2);
  std::vector<double> energies(count);
  std::vector<std::uint64_t> lookups(count);
  parallel_for_chunks(count, opts.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const std::uint32_t mask = 1u | (static_cast<std::uint32_t>(c) << 1);
      const CandidateEval ev = evaluate_candidate(mask, n_plus_1, traffic, coeffs, table,
                                                  opts.force_success_probability);
      energies[c] = ev.energy;
      lookups[c] = ev.lookups;
    }
  });

  OptimizationResult result{.best_ift = Ift(pattern_to_bits(1u, n_plus_1)),
                            .best_expected_energy = 0.0,
                            .ranking = {},
                            .wall_time_s = 0.0,
                            .table_lookups = 0};
  std::size_t best = 0;
  for (std::size_t c = 1; c < count; ++c) {
    const std::uint32_t mask = 1u | (static_cast<std::uint32_t>(c) << 1);
    const std::uint32_t best_mask = 1u | (static_cast<std::uint32_t>(best) << 1);
    if (better(energies[c], mask, energies[best], best_mask, n_plus_1)) best = c;
  }
  result.best_ift = Ift(pattern_to_bits(1u | (static_cast<std::uint32_t>(best) << 1), n_plus_1));
  result.best_expected_energy = energies[best];
  for (std::uint64_t l : lookups) result.table_lookups += l;
  if (opts.keep_ranking) {
    result.ranking.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
      result.ranking.push_back(CandidateScore{
          Ift(pattern_to_bits(1u | (static_cast<std::uint32_t>(c) << 1), n_plus_1)), energies[c]});
    }
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

OptimizationResult brute_force_optimize(int n_plus_1, const TrafficConditions& traffic,
                                        const ContentionCoefficients& coeffs,
                                        const ControllerParams& params,
                                        const TrajectorySpectrum& spectrum,
                                        const OptimizeOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (n_plus_1 < 2 || n_plus_1 > 8) {
    throw ValidationError("brute force enumeration is limited to platoons of 2..8");
  }
  traffic.validate();
  const ScenarioEnergyModel model(params, spectrum);

  const std::size_t count = std::size_t{1} << n_plus_1;
  std::vector<double> energies(count);
  parallel_for_chunks(count, opts.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const std::uint32_t mask = static_cast<std::uint32_t>(m);
      const Ift ift(pattern_to_bits(mask, n_plus_1));
      const SenderSuccessProfile profile = build_success_profile(ift, traffic, coeffs);
      std::vector<int> active;
      std::vector<double> p;
      for (int i = 0; i < n_plus_1; ++i) {
        if ((mask >> i) & 1u) {
          active.push_back(i);
          p.push_back(opts.force_success_probability
                          ? *opts.force_success_probability
                          : profile.p_unsat[static_cast<std::size_t>(i)]);
        }
      }
      const std::size_t outcomes = std::size_t{1} << active.size();
      double expected = 0.0;
      for (std::size_t d = 0; d < outcomes; ++d) {
        std::uint32_t pattern = 0;
        double prob = 1.0;
        for (std::size_t j = 0; j < active.size(); ++j) {
          if ((d >> j) & 1u) {
            pattern |= 1u << active[j];
            prob *= p[j];
          } else {
            prob *= 1.0 - p[j];
          }
        }
        expected += prob * model.energy_from_outcome(pattern, n_plus_1);
      }
      energies[m] = expected;
    }
  });

  std::size_t best = 0;
  for (std::size_t m = 1; m < count; ++m) {
    if (better(energies[m], static_cast<std::uint32_t>(m), energies[best],
               static_cast<std::uint32_t>(best), n_plus_1)) {
      best = m;
    }
  }
  OptimizationResult result{.best_ift =
                                Ift(pattern_to_bits(static_cast<std::uint32_t>(best), n_plus_1)),
                            .best_expected_energy = energies[best],
                            .ranking = {},
                            .wall_time_s = 0.0,
                            .table_lookups = 0};
  if (opts.keep_ranking) {
    result.ranking.reserve(count);
    for (std::size_t m = 0; m < count; ++m) {
      result.ranking.push_back(
          CandidateScore{Ift(pattern_to_bits(static_cast<std::uint32_t>(m), n_plus_1)),
                         energies[m]});
    }
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace cacc
