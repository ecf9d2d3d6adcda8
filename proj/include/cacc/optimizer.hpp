#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cacc/contention.hpp"
#include "cacc/ift.hpp"
#include "cacc/oscillation_energy.hpp"

namespace cacc {

// Oscillation energies of every degeneration scenario of the fully
// activated candidate [1,...,1,0], keyed by the full outcome bit pattern
// (bit N is always clear, so patterns index a flat array of 2^N entries).
struct EnergyTable {
  int n_plus_1 = 0;
  std::vector<double> energies;

  double at(std::uint32_t outcome_pattern) const;
  std::size_t size() const { return energies.size(); }
};

struct OptimizeOptions {
  int threads = 1;
  bool keep_ranking = false;
  int platoon_limit = 16;  // table construction refuses larger platoons
  // Diagnostic override: every active sender succeeds with this probability
  // instead of the contention model's value.
  std::optional<double> force_success_probability;
};

struct CandidateScore {
  Ift ift;
  double expected_energy;
};

struct OptimizationResult {
  Ift best_ift;
  double best_expected_energy = 0.0;
  std::vector<CandidateScore> ranking;  // filled when keep_ranking is set
  double wall_time_s = 0.0;
  std::uint64_t table_lookups = 0;  // step-2 lookups; 2*3^(N-1) in total
};

EnergyTable build_energy_table(int n_plus_1, const ControllerParams& params,
                               const TrajectorySpectrum& spectrum,
                               const OptimizeOptions& opts = {});

// Expected energy of a topology given scenario probabilities aligned with
// enumerate_degenerations order. Probabilities must sum to 1 within 1e-9.
double expected_energy(const Ift& ift, const EnergyTable& table,
                       std::span<const double> scenario_probs);

// Two-step search: build the energy table from the fully activated
// candidate, then weight table entries by each candidate's degeneration
// probabilities. Ties break toward fewer active senders, then the
// lexicographically smallest bit string.
OptimizationResult optimize(int n_plus_1, const TrafficConditions& traffic,
                            const ContentionCoefficients& coeffs, const ControllerParams& params,
                            const TrajectorySpectrum& spectrum, const OptimizeOptions& opts = {});

// Validation oracle: direct evaluation over every one of the 2^(N+1)
// topologies, without the shared table. Limited to n_plus_1 <= 8.
OptimizationResult brute_force_optimize(int n_plus_1, const TrafficConditions& traffic,
                                        const ContentionCoefficients& coeffs,
                                        const ControllerParams& params,
                                        const TrajectorySpectrum& spectrum,
                                        const OptimizeOptions& opts = {});

}  // namespace cacc
