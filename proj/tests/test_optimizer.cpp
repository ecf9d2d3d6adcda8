#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "cacc/errors.hpp"
#include "cacc/optimizer.hpp"
#include "cacc/trajectory.hpp"

using namespace cacc;

namespace {

// Multi-tone spectra confined to the traffic-oscillation band (a few
// strong lines below 0.15 Hz), synthesized directly so there is no
// truncation leakage outside the band.
TrajectorySpectrum small_spectrum(unsigned seed = 0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> mag(50.0, 600.0);
  std::uniform_real_distribution<double> phase(0.0, 6.28);
  const double duration = 240.0;
  TrajectorySpectrum sp;
  sp.source_duration = duration;
  sp.source_dt = 0.1;
  const int bins = 48;
  sp.freqs_hz.resize(bins);
  sp.amps.assign(bins, {0.0, 0.0});
  for (int k = 0; k < bins; ++k) sp.freqs_hz[k] = static_cast<double>(k + 1) / duration;
  for (int tone = 0; tone < 3; ++tone) {
    const int k = 1 + static_cast<int>(rng() % 35);  // up to 0.15 Hz
    const double m = mag(rng);
    const double ph = phase(rng);
    sp.amps[k] += std::polar(m, ph);
  }
  return sp;
}

TrajectorySpectrum zero_spectrum() {
  TrajectorySpectrum sp;
  sp.freqs_hz = {0.05, 0.1, 0.15, 0.2};
  sp.amps.assign(4, {0.0, 0.0});
  return sp;
}

const TrafficConditions kTraffic{25.0, 0.2, 8};

}  // namespace

TEST_CASE("energy table size and consistency") {
  const ControllerParams params;
  const auto sp = small_spectrum();
  const auto table = build_energy_table(3, params, sp);
  CHECK(table.size() == 4);
  // the all-failure entry equals the all-ACC platoon energy
  const ReceiverStatus all_acc(3, ControllerMode::Acc);
  CHECK(table.at(0) == doctest::Approx(scenario_energy(all_acc, sp, params)).epsilon(1e-12));

  const auto big = build_energy_table(15, params, sp);
  CHECK(big.size() == 16384);
}

TEST_CASE("energy table refuses oversized platoons") {
  const ControllerParams params;
  const auto sp = small_spectrum();
  CHECK_THROWS_AS(build_energy_table(17, params, sp), ValidationError);
  OptimizeOptions opts;
  opts.platoon_limit = 8;
  CHECK_THROWS_AS(build_energy_table(9, params, sp, opts), ValidationError);
}

TEST_CASE("energy table lookup integrity") {
  const ControllerParams params;
  const auto table = build_energy_table(3, params, small_spectrum());
  CHECK_THROWS_AS(table.at(4), IntegrityError);  // bit N set
}

TEST_CASE("expected_energy arithmetic and integrity") {
  EnergyTable table;
  table.n_plus_1 = 3;
  table.energies = {2.0, 7.0, 4.0, 9.0};

  // single-scenario topology: expected equals that scenario's energy
  const Ift none = Ift::parse("000");
  CHECK(expected_energy(none, table, std::vector<double>{1.0}) == 2.0);

  // two scenarios at 0.5/0.5 average their energies: patterns 000 and 100
  const Ift leader_only = Ift::parse("100");
  CHECK(expected_energy(leader_only, table, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx((2.0 + 7.0) / 2.0));

  CHECK_THROWS_AS(expected_energy(leader_only, table, std::vector<double>{0.7, 0.7}),
                  ValidationError);
  CHECK_THROWS_AS(expected_energy(leader_only, table, std::vector<double>{1.0}),
                  ValidationError);
}

TEST_CASE("expected_energy matches direct enumeration for a random topology") {
  const ControllerParams params;
  const auto sp = small_spectrum(3);
  const auto table = build_energy_table(6, params, sp);
  const auto coeffs = default_coefficients();
  const Ift ift = Ift::parse("110100");
  const auto profile = build_success_profile(ift, kTraffic, coeffs);
  const auto scenarios = enumerate_degenerations(ift);
  std::vector<double> probs;
  for (const auto& s : scenarios) probs.push_back(scenario_probability(s, profile));

  const double via_table = expected_energy(ift, table, probs);
  const ScenarioEnergyModel model(params, sp);
  double direct = 0.0;
  for (std::size_t d = 0; d < scenarios.size(); ++d) {
    direct += probs[d] * model.energy_from_outcome(scenarios[d].pattern(), 6);
  }
  CHECK(via_table == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("optimize on a two-vehicle platoon returns the only candidate") {
  const auto result =
      optimize(2, kTraffic, default_coefficients(), ControllerParams{}, small_spectrum());
  CHECK(result.best_ift.str() == "10");
}

TEST_CASE("optimize agrees with the brute-force oracle") {
  const auto coeffs = default_coefficients();
  const ControllerParams params;
  std::mt19937 rng(42);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 4 + trial % 4;
    const auto sp = small_spectrum(100 + static_cast<unsigned>(trial));
    TrafficConditions traffic = kTraffic;
    traffic.density_kbar = 20.0 + 5.0 * static_cast<double>(rng() % 5);
    const auto fast = optimize(n, traffic, coeffs, params, sp);
    const auto brute = brute_force_optimize(n, traffic, coeffs, params, sp);
    CHECK(fast.best_ift.str() == brute.best_ift.str());
    CHECK(fast.best_expected_energy ==
          doctest::Approx(brute.best_expected_energy).epsilon(1e-9));
  }
}

TEST_CASE("table path and direct path agree on every candidate") {
  const auto coeffs = default_coefficients();
  const ControllerParams params;
  for (int n : {4, 5, 6, 7}) {
    const auto sp = small_spectrum(static_cast<unsigned>(n));
    OptimizeOptions opts;
    opts.keep_ranking = true;
    const auto fast = optimize(n, kTraffic, coeffs, params, sp, opts);
    const auto brute = brute_force_optimize(n, kTraffic, coeffs, params, sp, opts);
    REQUIRE(brute.ranking.size() == (std::size_t{1} << n));
    for (const auto& cand : fast.ranking) {
      const double direct = brute.ranking[cand.ift.pattern()].expected_energy;
      CHECK(cand.expected_energy ==
            doctest::Approx(direct).epsilon(1e-9));
    }
  }
}

TEST_CASE("brute force confirms leader-on and tail-off rules") {
  const auto coeffs = default_coefficients();
  const ControllerParams params;
  for (unsigned seed = 0; seed < 4; ++seed) {
    const auto sp = small_spectrum(200 + seed);
    for (double density : {20.0, 25.0, 30.0}) {
      TrafficConditions traffic = kTraffic;
      traffic.density_kbar = density;
      const auto result = brute_force_optimize(6, traffic, coeffs, params, sp);
      CHECK(result.best_ift.active(0));
      CHECK_FALSE(result.best_ift.active(5));
    }
  }
}

TEST_CASE("zero spectrum ties break toward the fewest active senders") {
  const auto coeffs = default_coefficients();
  const ControllerParams params;
  const auto brute = brute_force_optimize(4, kTraffic, coeffs, params, zero_spectrum());
  CHECK(brute.best_ift.str() == "0000");
  CHECK(brute.best_expected_energy == 0.0);
  const auto fast = optimize(4, kTraffic, coeffs, params, zero_spectrum());
  CHECK(fast.best_ift.str() == "1000");  // candidates pin the leader on
}

TEST_CASE("step-2 lookup count is 2*3^(N-1)") {
  const auto coeffs = default_coefficients();
  const ControllerParams params;
  for (int n = 4; n <= 10; ++n) {
    const auto sp = small_spectrum(static_cast<unsigned>(n));
    const auto result = optimize(n, kTraffic, coeffs, params, sp);
    std::uint64_t want = 2;  // 2*3^(N-1) with N = n-1
    for (int i = 0; i < n - 2; ++i) want *= 3;
    CHECK(result.table_lookups == want);
  }
}

TEST_CASE("optimize is deterministic and thread-count independent") {
  const auto coeffs = default_coefficients();
  const ControllerParams params;
  const auto sp = small_spectrum(9);
  OptimizeOptions serial;
  serial.keep_ranking = true;
  OptimizeOptions parallel;
  parallel.threads = 4;
  parallel.keep_ranking = true;
  const auto a = optimize(7, kTraffic, coeffs, params, sp, serial);
  const auto b = optimize(7, kTraffic, coeffs, params, sp, serial);
  const auto c = optimize(7, kTraffic, coeffs, params, sp, parallel);
  CHECK(a.best_ift.str() == b.best_ift.str());
  CHECK(a.best_expected_energy == b.best_expected_energy);  // bit identical
  CHECK(a.best_ift.str() == c.best_ift.str());
  CHECK(a.best_expected_energy == c.best_expected_energy);
  REQUIRE(a.ranking.size() == c.ranking.size());
  for (std::size_t i = 0; i < a.ranking.size(); ++i) {
    CHECK(a.ranking[i].expected_energy == c.ranking[i].expected_energy);
  }
}

TEST_CASE("brute force rejects oversized platoons") {
  CHECK_THROWS_AS(
      brute_force_optimize(9, kTraffic, default_coefficients(), ControllerParams{},
                           small_spectrum()),
      ValidationError);
}
