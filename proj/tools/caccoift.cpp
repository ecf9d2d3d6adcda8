// Command-line front end: stability reports, contention sweeps, topology
// optimization, stochastic platoon simulation, strategy comparison and
// contention-model calibration, all driven by one JSON config file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>
#include <json.hpp>

#include "cacc/config.hpp"
#include "cacc/errors.hpp"
#include "cacc/oscillation_energy.hpp"
#include "cacc/optimizer.hpp"
#include "cacc/time_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;  // overrides config.output_dir when set
  int threads = 1;
};

cacc::ExperimentConfig load(const CommonArgs& args) {
  if (args.config_path.empty()) throw cacc::ValidationError("--config is required");
  auto cfg = cacc::load_config(args.config_path, args.overrides);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  return cfg;
}

fs::path ensure_out_dir(const cacc::ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw cacc::ValidationError("cannot write " + path.string());
  out << text;
}

const char* mode_label(cacc::ControllerMode m) {
  switch (m) {
    case cacc::ControllerMode::Cacc1: return "CACC1";
    case cacc::ControllerMode::Cacc2: return "CACC2";
    case cacc::ControllerMode::Cacc3: return "CACC3";
    case cacc::ControllerMode::Acc: return "ACC";
  }
  return "?";
}

int cmd_stability(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto dir = ensure_out_dir(cfg);
  json report;
  bool all_pass = true;
  const auto grid = cacc::default_analysis_grid();
  std::printf("mode    stable  margin      h*wk<=Wmax  cutoff(rad/s)\n");
  for (auto mode : {cacc::ControllerMode::Cacc1, cacc::ControllerMode::Cacc2,
                    cacc::ControllerMode::Cacc3, cacc::ControllerMode::Acc}) {
    const auto rep = cacc::stability_region_check(cfg.controller, mode);
    const double wc = rep.string_stable ? cacc::cutoff_frequency(cfg.controller, mode) : 0.0;
    all_pass = all_pass && rep.string_stable && rep.noise_bound_ok;
    // single-link transfer sweep for plotting
    cacc::FrequencyResponse fr;
    fr.grid = grid;
    fr.values.reserve(grid.size());
    for (double w : grid) {
      const auto g = cacc::link_gains(cfg.controller, mode, w);
      fr.values.push_back(mode == cacc::ControllerMode::Acc ? g.g1 : g.g1 + g.g2);
    }
    std::ofstream csv(dir / ("response_" + std::string(mode_label(mode)) + ".csv"));
    cacc::write_response_csv(fr, csv);
    std::printf("%-7s %-7s %-11.4g %-11s %.6g\n", mode_label(mode),
                rep.string_stable ? "pass" : "FAIL", rep.stability_margin,
                rep.noise_bound_ok ? "pass" : "FAIL", wc);
    json entry;
    entry["mode"] = mode_label(mode);
    entry["string_stable"] = rep.string_stable;
    entry["stability_margin"] = rep.stability_margin;
    entry["noise_bound_ok"] = rep.noise_bound_ok;
    entry["noise_margin"] = rep.noise_margin;
    if (rep.string_stable) entry["cutoff_rad_s"] = wc;
    report["modes"].push_back(entry);
  }
  report["all_pass"] = all_pass;
  write_text(dir / "stability.json", report.dump(2) + "\n");
  std::printf("%s; report written to %s\n", all_pass ? "all modes pass" : "some modes FAIL",
              (dir / "stability.json").c_str());
  return all_pass ? 0 : 1;
}

int cmd_contention(const CommonArgs& args, std::vector<double> densities) {
  const auto cfg = load(args);
  const auto dir = ensure_out_dir(cfg);
  if (densities.empty()) densities = {25.0, 30.0, 35.0, 40.0};
  const auto coeffs = cfg.effective_coeffs();
  const int cw = cfg.traffic.contention_window;
  std::string csv = "density_kbar,pct_activated,m,rho_bar,p_sat,p_unsat\n";
  char line[200];
  int clamp_count = 0;
  for (double kbar : densities) {
    cacc::TrafficConditions t = cfg.traffic;
    t.density_kbar = kbar;
    const int m = t.band_m();
    const int in_range = 2 * m + 1;
    for (int pct = 10; pct <= 100; pct += 10) {
      const double rho = std::max(1.0, std::floor(in_range * pct / 100.0));
      const double p_sat = cacc::saturated_success(rho, cw);
      bool clamped = false;
      const double p_unsat = cacc::unsaturated_success(rho, cw, coeffs, &clamped);
      if (clamped) ++clamp_count;
      std::snprintf(line, sizeof(line), "%.6g,%d,%d,%.6g,%.9g,%.9g\n", kbar, pct, m, rho, p_sat,
                    p_unsat);
      csv += line;
    }
  }
  if (clamp_count > 0) {
    std::fprintf(stderr,
                 "calibration warning: p_unsat clamped into [1e-9,1] at %d sweep points; "
                 "the coefficients leave the probability range there\n",
                 clamp_count);
  }
  write_text(dir / "contention.csv", csv);
  std::printf("per-density success-rate sweep written to %s\n", (dir / "contention.csv").c_str());
  return 0;
}

int cmd_optimize(const CommonArgs& args, bool ranking) {
  auto cfg = load(args);
  const auto dir = ensure_out_dir(cfg);
  const auto leader = cacc::make_leader(cfg);
  const auto spectrum = cacc::spectrum_from_trajectory(leader.position, leader.dt);
  {
    std::ofstream csv(dir / "spectrum.csv");
    cacc::write_spectrum_csv(spectrum, csv);
  }
  cacc::OptimizeOptions opts;
  opts.threads = args.threads;
  opts.keep_ranking = ranking;
  const auto result = cacc::optimize(cfg.platoon_size, cfg.traffic, cfg.effective_coeffs(),
                                     cfg.controller, spectrum, opts);
  json out;
  out["ift"] = result.best_ift.str();
  out["expected_energy"] = result.best_expected_energy;
  if (ranking) {
    json r = json::array();
    for (const auto& c : result.ranking) {
      r.push_back({{"ift", c.ift.str()}, {"expected_energy", c.expected_energy}});
    }
    out["ranking"] = r;
  } else {
    out["ranking"] = json::array();
  }
  out["wall_time_s"] = result.wall_time_s;
  write_text(dir / "optimize.json", out.dump(2) + "\n");
  std::printf("%s\n", result.best_ift.str().c_str());
  std::printf("expected energy %.6g, wall time %.3f s; result written to %s\n",
              result.best_expected_energy, result.wall_time_s,
              (dir / "optimize.json").c_str());
  return 0;
}

void write_run_csv(const fs::path& path, const cacc::RunMetrics& m, double dt) {
  std::ofstream out(path);
  if (!out) throw cacc::ValidationError("cannot write " + path.string());
  out << "t,vehicle,spacing_error,speed_error,speed\n";
  char line[200];
  const std::size_t steps = m.speed.empty() ? 0 : m.speed[0].size();
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < m.speed.size(); ++i) {
      std::snprintf(line, sizeof(line), "%.6g,%zu,%.9g,%.9g,%.9g\n",
                    static_cast<double>(k) * dt, i, m.spacing_error[i][k], m.speed_error[i][k],
                    m.speed[i][k]);
      out << line;
    }
  }
}

json run_summary(const cacc::RunMetrics& m) {
  json s;
  s["spacing_error_std"] = m.spacing_error_std;
  s["speed_error_std"] = m.speed_error_std;
  s["max_abs_spacing_error"] = m.max_abs_spacing_error;
  s["total_oscillation_energy"] = m.total_oscillation_energy;
  s["speed_saturation_events"] = m.speed_saturation_events;
  return s;
}

int cmd_simulate(const CommonArgs& args, std::vector<std::uint64_t> seeds) {
  auto cfg = load(args);
  const auto dir = ensure_out_dir(cfg);
  cacc::StrategySetup setup{cfg.platoon_size, cfg.traffic,  cfg.effective_coeffs(),
                            cfg.controller,   cfg.sim,      cacc::make_leader(cfg)};
  if (seeds.empty()) seeds = {cfg.sim.seed};

  std::optional<cacc::OiftPlanner> planner;
  if (cfg.sim.strategy == cacc::Strategy::Oift) {
    cacc::OptimizeOptions opts;
    opts.threads = args.threads;
    opts.force_success_probability = cfg.sim.force_success_probability;
    planner.emplace(cfg.platoon_size, cfg.traffic, cfg.effective_coeffs(), cfg.controller,
                    cacc::spectrum_from_trajectory(setup.leader.position, setup.leader.dt), opts);
  }
  json summary;
  summary["strategy"] = cacc::strategy_name(cfg.sim.strategy);
  for (std::uint64_t seed : seeds) {
    setup.sim.seed = seed;
    const auto metrics =
        cacc::run_strategy(setup, cfg.sim.strategy, planner ? &*planner : nullptr);
    const std::string name = "run_" + std::string(cacc::strategy_name(cfg.sim.strategy)) +
                             "_seed" + std::to_string(seed);
    write_run_csv(dir / (name + ".csv"), metrics, cfg.sim.dt);
    json s = run_summary(metrics);
    s["seed"] = seed;
    summary["runs"].push_back(s);
    std::printf("seed %llu: total oscillation energy %.6g, last spacing std %.4g m\n",
                static_cast<unsigned long long>(seed), metrics.total_oscillation_energy,
                metrics.spacing_error_std.back());
  }
  write_text(dir / "simulate.json", summary.dump(2) + "\n");
  std::printf("per-run CSVs and simulate.json written to %s\n", dir.c_str());
  return 0;
}

int cmd_compare(const CommonArgs& args, int n_seeds, std::uint64_t seed0) {
  auto cfg = load(args);
  const auto dir = ensure_out_dir(cfg);
  cacc::StrategySetup setup{cfg.platoon_size, cfg.traffic,  cfg.effective_coeffs(),
                            cfg.controller,   cfg.sim,      cacc::make_leader(cfg)};
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
  std::iota(seeds.begin(), seeds.end(), seed0);

  cacc::OptimizeOptions opts;
  opts.threads = args.threads;
  opts.force_success_probability = cfg.sim.force_success_probability;
  cacc::OiftPlanner planner(cfg.platoon_size, cfg.traffic, cfg.effective_coeffs(), cfg.controller,
                            cacc::spectrum_from_trajectory(setup.leader.position, setup.leader.dt),
                            opts);
  const auto summaries = cacc::compare_strategies(setup, seeds, &planner, args.threads);

  json out;
  out["seeds"] = seeds;
  out["optimal_ift"] = planner.plan().best_ift.str();
  std::string csv = "strategy,vehicle,mean_spacing_error_std,mean_speed_error_std,mean_max_abs_spacing_error\n";
  char line[200];
  std::printf("strategy  mean_total_energy  first_spacing_std  last_spacing_std\n");
  for (const auto& s : summaries) {
    json entry;
    entry["strategy"] = cacc::strategy_name(s.strategy);
    entry["mean_total_energy"] = s.mean_total_energy;
    entry["per_seed_total_energy"] = s.per_seed_total_energy;
    entry["mean_spacing_error_std"] = s.mean_spacing_error_std;
    entry["mean_speed_error_std"] = s.mean_speed_error_std;
    out["strategies"].push_back(entry);
    for (std::size_t i = 0; i < s.mean_spacing_error_std.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s,%zu,%.9g,%.9g,%.9g\n", cacc::strategy_name(s.strategy),
                    i, s.mean_spacing_error_std[i], s.mean_speed_error_std[i],
                    s.mean_max_abs_spacing_error[i]);
      csv += line;
    }
    std::printf("%-9s %-18.6g %-18.4g %.4g\n", cacc::strategy_name(s.strategy),
                s.mean_total_energy, s.mean_spacing_error_std[1],
                s.mean_spacing_error_std.back());
  }
  write_text(dir / "compare.csv", csv);
  write_text(dir / "compare.json", out.dump(2) + "\n");
  std::printf("comparison written to %s and %s\n", (dir / "compare.csv").c_str(),
              (dir / "compare.json").c_str());
  return 0;
}

int cmd_calibrate(const CommonArgs& args, std::vector<int> cws, int rho_max, int trials,
                  std::uint64_t seed) {
  const auto cfg = load(args);
  const auto dir = ensure_out_dir(cfg);
  cacc::CalibrationOptions opts;
  if (!cws.empty()) opts.cw_values = cws;
  opts.rho_max = rho_max;
  opts.trials = trials;
  opts.seed = seed;
  const auto result = cacc::calibrate_coefficients(opts);
  std::ofstream csv(dir / "calibration.csv");
  cacc::write_calibration_csv(result, csv);
  json out;
  out["k1"] = result.coeffs.k1;
  out["k2"] = result.coeffs.k2;
  out["k3"] = result.coeffs.k3;
  out["mean_error"] = result.mean_error;
  out["std_error"] = result.std_error;
  write_text(dir / "calibration.json", out.dump(2) + "\n");
  std::printf("k1=%.10g k2=%.10g k3=%.10g (mean err %.4g, std %.4g)\n", result.coeffs.k1,
              result.coeffs.k2, result.coeffs.k3, result.mean_error, result.std_error);
  std::printf("table written to %s\n", (dir / "calibration.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CACC platoon topology optimization and simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs common;
  app.add_option("-c,--config", common.config_path, "experiment config JSON")->required(false);
  app.add_option("-s,--set", common.overrides, "dotted-path config override, e.g. sim.seed=7");
  app.add_option("-o,--out", common.out_dir, "output directory (overrides config)");
  app.add_option("-j,--threads", common.threads, "worker threads for optimization");

  auto* stability = app.add_subcommand("stability", "stability-region and cut-off report");
  auto* contention = app.add_subcommand("contention", "success-rate sweep over densities");
  std::vector<double> densities;
  contention->add_option("--densities", densities, "densities (veh/km) to sweep");
  auto* optimize = app.add_subcommand("optimize", "solve for the optimal topology");
  bool ranking = false;
  optimize->add_flag("--ranking", ranking, "include the full candidate ranking");
  auto* simulate = app.add_subcommand("simulate", "seeded closed-loop runs for one strategy");
  std::vector<std::uint64_t> seeds;
  simulate->add_option("--seeds", seeds, "seeds to run (default: config seed)");
  auto* compare = app.add_subcommand("compare", "compare OIFT/DIFT/FIFT over a seed set");
  int n_seeds = 20;
  std::uint64_t seed0 = 1;
  compare->add_option("--runs", n_seeds, "number of seeded runs per strategy");
  compare->add_option("--seed0", seed0, "first seed");
  auto* calibrate = app.add_subcommand("calibrate", "fit k1,k2,k3 from the slot-level simulator");
  std::vector<int> cal_cws;
  int cal_rho_max = 12;
  int cal_trials = 200000;
  std::uint64_t cal_seed = 20190724;
  calibrate->add_option("--cw", cal_cws, "contention windows to simulate (default 8)");
  calibrate->add_option("--rho-max", cal_rho_max, "largest sender count");
  calibrate->add_option("--trials", cal_trials, "Monte-Carlo trials per point");
  calibrate->add_option("--seed", cal_seed, "Monte-Carlo seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (stability->parsed()) return cmd_stability(common);
    if (contention->parsed()) return cmd_contention(common, densities);
    if (optimize->parsed()) return cmd_optimize(common, ranking);
    if (simulate->parsed()) return cmd_simulate(common, seeds);
    if (compare->parsed()) return cmd_compare(common, n_seeds, seed0);
    if (calibrate->parsed()) return cmd_calibrate(common, cal_cws, cal_rho_max, cal_trials, cal_seed);
  } catch (const cacc::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const cacc::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
