#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cacc/config.hpp"
#include "cacc/errors.hpp"
#include "cacc/trajectory.hpp"

using namespace cacc;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

const char* kConfigJson = R"({
  "platoon": {"size": 6},
  "traffic": {"density_kbar": 25.0, "comm_range_r_km": 0.2, "contention_window": 8},
  "controller": {"headway_h": 1.0,
                 "omega_k": {"cacc1": 0.8, "cacc2": 0.8, "cacc3": 0.9, "acc": 1.45},
                 "alpha": 0.7, "beta": 0.3, "w_max": 2.0, "standstill_l": 5.0},
  "sim": {"dt": 0.1, "seed": 9, "duration": 60.0, "strategy": "dift"},
  "trajectory": {"synthetic": {"base_speed": 8.0,
                               "components": [{"amplitude": 5.0, "period": 30.0, "phase": 0.0}]}},
  "output_dir": "out"
})";

}  // namespace

TEST_CASE("two-column trajectory parsing") {
  const auto p = write_temp("traj_basic.csv", "0,0\n0.1,1\n0.2,2\n");
  const auto records = load_trajectory(p, TrajectoryFormat::Txy);
  REQUIRE(records.size() == 3);
  CHECK(records[1].time == doctest::Approx(0.1));
  CHECK(records[2].position == doctest::Approx(2.0));
  CHECK_FALSE(records[0].speed.has_value());
}

TEST_CASE("header rows and malformed rows") {
  const auto p = write_temp("traj_header.csv", "t,x\n0,0\n0.1,1\n");
  CHECK(load_trajectory(p, TrajectoryFormat::Txy).size() == 2);

  const auto bad = write_temp("traj_bad.csv", "0,0\n0.1,oops\n0.2,2\n");
  try {
    load_trajectory(bad, TrajectoryFormat::Txy);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("non-uniform timestamps are rejected") {
  const auto p = write_temp("traj_nonuniform.csv", "0,0\n0.1,1\n0.25,2\n");
  CHECK_THROWS_AS(load_trajectory(p, TrajectoryFormat::Txy), ValidationError);
}

TEST_CASE("feet conversion") {
  const auto p = write_temp("traj_feet.csv", "0,100\n0.1,110\n0.2,120\n");
  const auto records = load_trajectory(p, TrajectoryFormat::Txy, /*feet_to_m=*/true);
  CHECK(records[0].position == doctest::Approx(30.48));
  CHECK(records[2].position == doctest::Approx(36.576));
}

TEST_CASE("ngsim format parsing") {
  const auto p = write_temp("traj_ngsim.csv",
                            "vehicle_id,frame,local_y_m,velocity_mps\n"
                            "12,0,0.0,10.0\n12,1,1.0,10.0\n12,2,2.0,10.0\n");
  const auto records = load_trajectory(p, TrajectoryFormat::Ngsim);
  REQUIRE(records.size() == 3);
  CHECK(records[1].time == doctest::Approx(0.1));  // 10 Hz framing
  CHECK(records[1].speed.has_value());
  CHECK(*records[1].speed == doctest::Approx(10.0));
}

TEST_CASE("ngsim loader refuses mixed vehicles") {
  const auto p = write_temp("traj_ngsim_mixed.csv",
                            "vehicle_id,frame,local_y_m,velocity_mps\n"
                            "12,0,0.0,10\n13,1,1.0,10\n");
  CHECK_THROWS_AS(load_trajectory(p, TrajectoryFormat::Ngsim), ValidationError);
}

TEST_CASE("matching-rate resampling is the identity") {
  std::vector<TrajectoryRecord> records;
  for (int k = 0; k < 50; ++k) {
    records.push_back({0.1 * k, 2.0 * k, std::nullopt});
  }
  const auto out = resample(records, 0.1);
  REQUIRE(out.size() == records.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    CHECK(out[k].position == doctest::Approx(records[k].position).epsilon(1e-12));
  }
}

TEST_CASE("resampling interpolates linearly") {
  std::vector<TrajectoryRecord> records{{0.0, 0.0, {}}, {0.2, 2.0, {}}, {0.4, 4.0, {}}};
  const auto out = resample(records, 0.1);
  REQUIRE(out.size() == 5);
  CHECK(out[1].position == doctest::Approx(1.0));
  CHECK(out[3].position == doctest::Approx(3.0));
}

TEST_CASE("leader_from_records derives kinematics") {
  std::vector<TrajectoryRecord> records;
  for (int k = 0; k < 100; ++k) records.push_back({0.1 * k, 5.0 * 0.1 * k, std::nullopt});
  const auto leader = leader_from_records(records, 0.1);
  CHECK(leader.speed[50] == doctest::Approx(5.0));
  CHECK(leader.accel[50] == doctest::Approx(0.0));
}

TEST_CASE("config parse, validation and round trip") {
  const auto cfg = config_from_json_text(kConfigJson);
  CHECK(cfg.platoon_size == 6);
  CHECK(cfg.traffic.density_kbar == 25.0);
  CHECK(cfg.sim.strategy == Strategy::Dift);
  CHECK_FALSE(cfg.coeffs.has_value());
  cfg.validate();

  const auto text = config_to_json_text(cfg);
  const auto again = config_from_json_text(text);
  CHECK(config_to_json_text(again) == text);
  CHECK(again.platoon_size == cfg.platoon_size);
  CHECK(again.synthetic.components.size() == cfg.synthetic.components.size());
}

TEST_CASE("config diagnostics carry the field path") {
  try {
    config_from_json_text(R"({"traffic": {"density_kbar": "dense"}})");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("traffic.density_kbar") != std::string::npos);
  }
}

TEST_CASE("config file loading with dotted overrides") {
  const auto p = write_temp("config_basic.json", kConfigJson);
  const auto cfg = load_config(p, {"traffic.density_kbar=30", "sim.seed=77",
                                   "sim.strategy=\"fift\""});
  CHECK(cfg.traffic.density_kbar == 30.0);
  CHECK(cfg.sim.seed == 77);
  CHECK(cfg.sim.strategy == Strategy::Fift);
}

TEST_CASE("invalid configs are rejected on load") {
  const auto p = write_temp("config_bad.json", kConfigJson);
  CHECK_THROWS_AS(load_config(p, {"controller.headway_h=-1"}), ValidationError);
  CHECK_THROWS_AS(load_config(p, {"platoon.size=1"}), ValidationError);
  CHECK_THROWS_AS(load_config(p, {"controler.headway_h=2"}), ValidationError);  // typo
}

TEST_CASE("make_leader rejects short trajectories") {
  const auto traj = write_temp("traj_short.csv", "0,0\n0.1,1\n0.2,2\n0.3,3\n");
  auto cfg = config_from_json_text(kConfigJson);
  cfg.file_source = FileTrajectorySource{traj, TrajectoryFormat::Txy, false};
  CHECK_THROWS_AS(make_leader(cfg), ValidationError);
}

TEST_CASE("make_leader synthesizes the configured duration") {
  const auto cfg = config_from_json_text(kConfigJson);
  const auto leader = make_leader(cfg);
  CHECK(leader.duration() == doctest::Approx(60.0));
  CHECK(leader.speed[0] == doctest::Approx(8.0));
}
