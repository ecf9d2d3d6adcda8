#include "cacc/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cacc/errors.hpp"

namespace cacc {
namespace {

constexpr double kFeetToMeters = 0.3048;
constexpr double kDtTolerance = 1e-6;
constexpr double kNgsimFrameRate = 10.0;  // Hz

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return fields;
}

double parse_number(const std::string& s, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": malformed " + what + " '" + s +
                          "'");
  }
}

void check_uniform(const std::vector<TrajectoryRecord>& records) {
  if (records.size() < 2) throw ValidationError("trajectory needs at least two records");
  const double dt = records[1].time - records[0].time;
  if (!(dt > 0.0)) throw ValidationError("trajectory timestamps must be strictly increasing");
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double step = records[i].time - records[i - 1].time;
    if (!(step > 0.0)) {
      throw ValidationError("trajectory timestamps must be strictly increasing near t=" +
                            std::to_string(records[i].time));
    }
    if (std::abs(step - dt) > kDtTolerance) {
      throw ValidationError("trajectory timestamps are not uniform near t=" +
                            std::to_string(records[i].time));
    }
  }
}

}  // namespace

std::vector<TrajectoryRecord> load_trajectory(const std::filesystem::path& path,
                                              TrajectoryFormat format, bool feet_to_m) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trajectory file " + path.string());
  std::vector<TrajectoryRecord> records;
  std::string line;
  int line_no = 0;

  if (format == TrajectoryFormat::Txy) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto fields = split_csv(line);
      if (line_no == 1 && !fields.empty() && !fields[0].empty() &&
          !std::isdigit(static_cast<unsigned char>(fields[0][0])) && fields[0][0] != '-' &&
          fields[0][0] != '+' && fields[0][0] != '.') {
        continue;  // optional header row
      }
      if (fields.size() < 2) {
        throw ValidationError("line " + std::to_string(line_no) + ": expected t,x columns");
      }
      TrajectoryRecord r;
      r.time = parse_number(fields[0], line_no, "time");
      r.position = parse_number(fields[1], line_no, "position");
      if (fields.size() >= 3 && !fields[2].empty()) {
        r.speed = parse_number(fields[2], line_no, "speed");
      }
      records.push_back(r);
    }
  } else {
    // Headered NGSIM-style export. Column order is taken from the header.
    if (!std::getline(in, line)) throw ValidationError("empty trajectory file");
    ++line_no;
    const auto header = split_csv(line);
    auto col = [&](const std::string& name) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
      }
      return -1;
    };
    const int c_vid = col("vehicle_id");
    const int c_frame = col("frame");
    const int c_y = col("local_y_m");
    const int c_v = col("velocity_mps");
    if (c_vid < 0 || c_frame < 0 || c_y < 0) {
      throw ValidationError("ngsim header must contain vehicle_id,frame,local_y_m");
    }
    std::string vid;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      const std::size_t need = static_cast<std::size_t>(std::max({c_vid, c_frame, c_y, c_v})) + 1;
      if (fields.size() < need) {
        throw ValidationError("line " + std::to_string(line_no) + ": too few columns");
      }
      if (vid.empty()) {
        vid = fields[static_cast<std::size_t>(c_vid)];
      } else if (fields[static_cast<std::size_t>(c_vid)] != vid) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": file mixes vehicle ids ('" + vid + "' and '" +
                              fields[static_cast<std::size_t>(c_vid)] +
                              "'); the loader takes a single-vehicle trajectory");
      }
      TrajectoryRecord r;
      r.time = parse_number(fields[static_cast<std::size_t>(c_frame)], line_no, "frame") /
               kNgsimFrameRate;
      r.position = parse_number(fields[static_cast<std::size_t>(c_y)], line_no, "position");
      if (c_v >= 0 && !fields[static_cast<std::size_t>(c_v)].empty()) {
        r.speed = parse_number(fields[static_cast<std::size_t>(c_v)], line_no, "speed");
      }
      records.push_back(r);
    }
  }

  if (feet_to_m) {
    for (auto& r : records) {
      r.position *= kFeetToMeters;
      if (r.speed) r.speed = *r.speed * kFeetToMeters;
    }
  }
  check_uniform(records);
  return records;
}

std::vector<TrajectoryRecord> resample(std::span<const TrajectoryRecord> records, double dt) {
  if (records.size() < 2) throw ValidationError("resample needs at least two records");
  if (!(dt > 0.0)) throw ValidationError("resample needs dt > 0");
  const double t0 = records.front().time;
  const double t1 = records.back().time;
  const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
  std::vector<TrajectoryRecord> out;
  out.reserve(steps);
  std::size_t j = 0;
  const bool has_speed = records.front().speed.has_value();
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (j + 2 < records.size() && records[j + 1].time <= t) ++j;
    const auto& a = records[j];
    const auto& b = records[j + 1];
    const double w = std::clamp((t - a.time) / (b.time - a.time), 0.0, 1.0);
    TrajectoryRecord r;
    r.time = t;
    r.position = a.position + w * (b.position - a.position);
    if (has_speed && a.speed && b.speed) r.speed = *a.speed + w * (*b.speed - *a.speed);
    out.push_back(r);
  }
  return out;
}

LeaderTrajectory leader_from_records(std::span<const TrajectoryRecord> records, double dt) {
  const auto uniform = resample(records, dt);
  const std::size_t n = uniform.size();
  LeaderTrajectory lt;
  lt.dt = dt;
  lt.position.resize(n);
  lt.speed.resize(n);
  lt.accel.resize(n);
  for (std::size_t k = 0; k < n; ++k) lt.position[k] = uniform[k].position;
  const bool has_speed = uniform.front().speed.has_value();
  for (std::size_t k = 0; k < n; ++k) {
    if (has_speed) {
      lt.speed[k] = *uniform[k].speed;
    } else if (k == 0) {
      lt.speed[k] = (lt.position[1] - lt.position[0]) / dt;
    } else if (k + 1 == n) {
      lt.speed[k] = (lt.position[k] - lt.position[k - 1]) / dt;
    } else {
      lt.speed[k] = (lt.position[k + 1] - lt.position[k - 1]) / (2.0 * dt);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 0) {
      lt.accel[k] = (lt.speed[1] - lt.speed[0]) / dt;
    } else if (k + 1 == n) {
      lt.accel[k] = (lt.speed[k] - lt.speed[k - 1]) / dt;
    } else {
      lt.accel[k] = (lt.speed[k + 1] - lt.speed[k - 1]) / (2.0 * dt);
    }
  }
  return lt;
}

LeaderTrajectory synthesize_leader(const SyntheticLeader& gen, double duration, double dt) {
  if (!(duration > 0.0) || !(dt > 0.0)) throw ValidationError("bad synthetic leader request");
  if (!(gen.base_speed >= 0.0)) throw ValidationError("synthetic base_speed must be >= 0");
  for (const auto& c : gen.components) {
    if (!(c.period > 0.0)) throw ValidationError("synthetic component period must be > 0");
    if (!(c.amplitude >= 0.0)) throw ValidationError("synthetic amplitude must be >= 0");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  LeaderTrajectory lt;
  lt.dt = dt;
  lt.position.resize(n);
  lt.speed.resize(n);
  lt.accel.resize(n);
  double x = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    double v = gen.base_speed;
    double a = 0.0;
    for (const auto& c : gen.components) {
      const double w = 2.0 * std::numbers::pi / c.period;
      v += c.amplitude * std::sin(w * t + c.phase);
      a += c.amplitude * w * std::cos(w * t + c.phase);
    }
    if (v < 0.0) {
      v = 0.0;
      a = 0.0;
    }
    lt.position[k] = x;
    lt.speed[k] = v;
    lt.accel[k] = a;
    x += v * dt;
  }
  return lt;
}

}  // namespace cacc
