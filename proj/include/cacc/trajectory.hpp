#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cacc {

struct TrajectoryRecord {
  double time = 0.0;      // s
  double position = 0.0;  // m
  std::optional<double> speed;  // m/s
};

enum class TrajectoryFormat {
  Txy,    // plain two-column CSV: t,x
  Ngsim,  // headered CSV: vehicle_id,frame,local_y_m,velocity_mps at 10 Hz
};

// Parses one single-vehicle trajectory. Timestamps must be strictly
// increasing with uniform spacing (1e-6 s tolerance). feet_to_m converts
// positions (and speeds) from feet.
std::vector<TrajectoryRecord> load_trajectory(const std::filesystem::path& path,
                                              TrajectoryFormat format, bool feet_to_m = false);

// Linear interpolation onto a uniform dt grid spanning the records.
std::vector<TrajectoryRecord> resample(std::span<const TrajectoryRecord> records, double dt);

// Prescribed leader motion on the control grid.
struct LeaderTrajectory {
  double dt = 0.1;
  std::vector<double> position;
  std::vector<double> speed;
  std::vector<double> accel;

  double duration() const { return static_cast<double>(position.size()) * dt; }
};

// Speeds (when absent) and accelerations come from central differences.
LeaderTrajectory leader_from_records(std::span<const TrajectoryRecord> records, double dt);

// Sum-of-sinusoids speed profile around a base speed; speed saturates at 0.
struct SyntheticComponent {
  double amplitude = 2.0;  // m/s
  double period = 30.0;    // s
  double phase = 0.0;      // rad
};

struct SyntheticLeader {
  double base_speed = 8.0;  // m/s
  std::vector<SyntheticComponent> components = {{4.0, 24.0, 0.0}, {2.5, 12.0, 1.2}};
};

LeaderTrajectory synthesize_leader(const SyntheticLeader& gen, double duration, double dt);

}  // namespace cacc
