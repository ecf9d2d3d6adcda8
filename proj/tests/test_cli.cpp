// Exercises the installed CLI binary end to end: subcommand behavior, exit
// codes and byte-reproducible outputs. The binary path arrives as argv[1].

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("[%s] %s\n", ok ? "ok" : "FAILED", what.c_str());
  if (!ok) ++failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int exit_code;
  std::string stdout_text;
  std::string stderr_text;
};

RunResult run(const std::string& cmd, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string full = cmd + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(full.c_str());
  return RunResult{WEXITSTATUS(status), slurp(out), slurp(err)};
}

const char* kConfig = R"({
  "platoon": {"size": 5},
  "traffic": {"density_kbar": 28.57, "comm_range_r_km": 0.2, "contention_window": 8},
  "controller": {"headway_h": 1.0,
                 "omega_k": {"cacc1": 0.8, "cacc2": 0.8, "cacc3": 0.9, "acc": 1.45},
                 "alpha": 0.7, "beta": 0.3, "w_max": 2.0, "standstill_l": 5.0},
  "sim": {"dt": 0.1, "seed": 3, "duration": 60.0, "strategy": "oift",
          "update_period_tau": 30.0, "lead_time_delta_tau": 1.0},
  "trajectory": {"synthetic": {"base_speed": 8.0,
                               "components": [{"amplitude": 5.0, "period": 30.0, "phase": 0.0}]}},
  "output_dir": "OUTDIR"
})";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path-to-caccoift>\n");
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path work = fs::temp_directory_path() / "caccoift_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);

  std::string cfg_text = kConfig;
  const std::string outdir = (work / "out").string();
  cfg_text.replace(cfg_text.find("OUTDIR"), 6, outdir);
  const fs::path cfg = work / "config.json";
  std::ofstream(cfg) << cfg_text;

  // stability: §-style defaults pass for all four modes
  auto st = run(bin + " stability -c " + cfg.string(), work);
  check(st.exit_code == 0, "stability exits 0");
  check(st.stdout_text.find("all modes pass") != std::string::npos, "stability reports pass");
  check(fs::exists(fs::path(outdir) / "stability.json"), "stability.json written");
  const std::string resp = slurp(fs::path(outdir) / "response_ACC.csv");
  check(resp.rfind("omega,re,im,magnitude_db\n", 0) == 0, "response sweep csv written");

  // optimize on a two-vehicle platoon prints the only candidate
  auto opt2 = run(bin + " optimize -c " + cfg.string() + " -s platoon.size=2", work);
  check(opt2.exit_code == 0, "optimize size-2 exits 0");
  check(opt2.stdout_text.substr(0, 3) == "10\n", "optimize size-2 prints 10");

  // optimize is reproducible apart from the wall-time field
  auto opt_a = run(bin + " optimize -c " + cfg.string(), work);
  json ja = json::parse(slurp(fs::path(outdir) / "optimize.json"));
  auto opt_b = run(bin + " optimize -c " + cfg.string(), work);
  json jb = json::parse(slurp(fs::path(outdir) / "optimize.json"));
  check(opt_a.exit_code == 0 && opt_b.exit_code == 0, "optimize exits 0");
  ja.erase("wall_time_s");
  jb.erase("wall_time_s");
  check(ja == jb, "optimize result deterministic");
  check(ja["ift"].get<std::string>().front() == '1', "optimal topology activates the leader");
  check(ja["ift"].get<std::string>().back() == '0', "optimal topology silences the tail");

  // simulate twice with the same seed: byte-identical run CSV
  auto sim_a = run(bin + " simulate -c " + cfg.string() + " -s sim.strategy=\"dift\"", work);
  const std::string run_csv = slurp(fs::path(outdir) / "run_dift_seed3.csv");
  auto sim_b = run(bin + " simulate -c " + cfg.string() + " -s sim.strategy=\"dift\"", work);
  check(sim_a.exit_code == 0 && sim_b.exit_code == 0, "simulate exits 0");
  check(!run_csv.empty() && run_csv == slurp(fs::path(outdir) / "run_dift_seed3.csv"),
        "simulate output byte-identical for the same seed");
  check(run_csv.rfind("t,vehicle,spacing_error,speed_error,speed\n", 0) == 0,
        "run csv header");

  // compare with certain links: OIFT and DIFT coincide when the optimizer
  // keeps every sender active
  auto cmp = run(bin + " compare -c " + cfg.string() +
                     " -s sim.force_success_probability=1.0 --runs 2",
                 work);
  check(cmp.exit_code == 0, "compare exits 0");
  json jc = json::parse(slurp(fs::path(outdir) / "compare.json"));
  const std::string best = jc["optimal_ift"].get<std::string>();
  check(best == "11110", "certain links make full activation optimal (got " + best + ")");
  if (best == "11110") {
    const auto& oift = jc["strategies"][0];
    const auto& dift = jc["strategies"][1];
    check(oift["mean_total_energy"] == dift["mean_total_energy"],
          "OIFT == DIFT under certain links and a fully active optimum");
  }

  // calibrate writes the fitted table
  auto cal = run(bin + " calibrate -c " + cfg.string() + " --trials 20000", work);
  check(cal.exit_code == 0, "calibrate exits 0");
  const std::string cal_csv = slurp(fs::path(outdir) / "calibration.csv");
  check(cal_csv.rfind("rho_bar,cw,p_sat,p_unsat_simulated,p_unsat_fitted\n", 0) == 0,
        "calibration csv header");

  // contention sweep
  auto con = run(bin + " contention -c " + cfg.string() + " --densities 25 30", work);
  check(con.exit_code == 0, "contention exits 0");
  check(slurp(fs::path(outdir) / "contention.csv").find("density_kbar") == 0,
        "contention csv written");

  // validation failures exit 1 with a field-path diagnostic
  auto bad = run(bin + " stability -c " + cfg.string() + " -s controller.headway_h=-1", work);
  check(bad.exit_code == 1, "invalid config exits 1");
  check(bad.stderr_text.find("controller.headway_h") != std::string::npos,
        "diagnostic names the offending field");

  auto missing = run(bin + " stability -c " + (work / "nope.json").string(), work);
  check(missing.exit_code == 1, "missing config exits 1");

  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
