#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cacc/contention.hpp"
#include "cacc/freq_control.hpp"
#include "cacc/time_sim.hpp"
#include "cacc/trajectory.hpp"

namespace cacc {

struct FileTrajectorySource {
  std::filesystem::path path;
  TrajectoryFormat format = TrajectoryFormat::Txy;
  bool feet = false;
};

struct ExperimentConfig {
  int platoon_size = 15;
  TrafficConditions traffic;
  ControllerParams controller;
  std::optional<ContentionCoefficients> coeffs;  // empty -> calibrated defaults
  SimConfig sim;
  std::optional<FileTrajectorySource> file_source;
  SyntheticLeader synthetic;  // used when no file source is given
  std::string output_dir = "out";

  ContentionCoefficients effective_coeffs() const;
  void validate() const;  // throws ValidationError with a field-path message
};

// Parse/serialize the JSON document described in the README. serialize ∘
// parse is field-for-field identical.
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

// Loads a config file and applies dotted-path overrides of the form
// "traffic.density_kbar=30" before validation.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

// Leader motion for the configured trajectory source, covering
// sim.duration at sim.dt.
LeaderTrajectory make_leader(const ExperimentConfig& config);

}  // namespace cacc
