#include "cacc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cacc/errors.hpp"

namespace cacc {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

const json* find(const json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& path, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    fail(path + "." + key, "missing required number");
  }
  if (!v->is_number()) fail(path + "." + key, "expected a number");
  return v->get<double>();
}

int get_int(const json& j, const std::string& path, const std::string& key,
            std::optional<int> fallback = std::nullopt) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    fail(path + "." + key, "missing required integer");
  }
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<int>();
}

bool get_bool(const json& j, const std::string& path, const std::string& key, bool fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
  return v->get<bool>();
}

std::string get_string(const json& j, const std::string& path, const std::string& key,
                       std::optional<std::string> fallback = std::nullopt) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    fail(path + "." + key, "missing required string");
  }
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

ExperimentConfig parse(const json& j) {
  if (!j.is_object()) throw ValidationError("config root must be a JSON object");
  ExperimentConfig cfg;

  if (const json* p = find(j, "platoon")) {
    cfg.platoon_size = get_int(*p, "platoon", "size", cfg.platoon_size);
  }
  if (const json* t = find(j, "traffic")) {
    cfg.traffic.density_kbar = get_number(*t, "traffic", "density_kbar", cfg.traffic.density_kbar);
    cfg.traffic.comm_range_r = get_number(*t, "traffic", "comm_range_r_km", cfg.traffic.comm_range_r);
    cfg.traffic.contention_window =
        get_int(*t, "traffic", "contention_window", cfg.traffic.contention_window);
  }
  if (const json* c = find(j, "controller")) {
    cfg.controller.headway_h = get_number(*c, "controller", "headway_h", cfg.controller.headway_h);
    if (const json* wk = find(*c, "omega_k")) {
      cfg.controller.omega_k[0] = get_number(*wk, "controller.omega_k", "cacc1", cfg.controller.omega_k[0]);
      cfg.controller.omega_k[1] = get_number(*wk, "controller.omega_k", "cacc2", cfg.controller.omega_k[1]);
      cfg.controller.omega_k[2] = get_number(*wk, "controller.omega_k", "cacc3", cfg.controller.omega_k[2]);
      cfg.controller.omega_k[3] = get_number(*wk, "controller.omega_k", "acc", cfg.controller.omega_k[3]);
    }
    cfg.controller.alpha = get_number(*c, "controller", "alpha", cfg.controller.alpha);
    cfg.controller.beta = get_number(*c, "controller", "beta", cfg.controller.beta);
    cfg.controller.w_max = get_number(*c, "controller", "w_max", cfg.controller.w_max);
    cfg.controller.standstill_l =
        get_number(*c, "controller", "standstill_l", cfg.controller.standstill_l);
  }
  if (const json* cc = find(j, "contention_coeffs")) {
    if (!cc->is_null()) {
      ContentionCoefficients k;
      k.k1 = get_number(*cc, "contention_coeffs", "k1");
      k.k2 = get_number(*cc, "contention_coeffs", "k2");
      k.k3 = get_number(*cc, "contention_coeffs", "k3");
      cfg.coeffs = k;
    }
  }
  if (const json* s = find(j, "sim")) {
    cfg.sim.dt = get_number(*s, "sim", "dt", cfg.sim.dt);
    cfg.sim.seed = static_cast<std::uint64_t>(get_number(*s, "sim", "seed", 1.0));
    cfg.sim.duration = get_number(*s, "sim", "duration", cfg.sim.duration);
    cfg.sim.strategy = parse_strategy(get_string(*s, "sim", "strategy", "oift"));
    cfg.sim.accel_min = get_number(*s, "sim", "accel_min", cfg.sim.accel_min);
    cfg.sim.accel_max = get_number(*s, "sim", "accel_max", cfg.sim.accel_max);
    cfg.sim.accel_limits_enabled =
        get_bool(*s, "sim", "accel_limits_enabled", cfg.sim.accel_limits_enabled);
    cfg.sim.update_period_tau =
        get_number(*s, "sim", "update_period_tau", cfg.sim.update_period_tau);
    cfg.sim.lead_time_delta_tau =
        get_number(*s, "sim", "lead_time_delta_tau", cfg.sim.lead_time_delta_tau);
    if (const json* f = find(*s, "force_success_probability")) {
      if (!f->is_null()) {
        if (!f->is_number()) fail("sim.force_success_probability", "expected number or null");
        cfg.sim.force_success_probability = f->get<double>();
      }
    }
  }
  if (const json* tr = find(j, "trajectory")) {
    const json* file = find(*tr, "file");
    const json* synth = find(*tr, "synthetic");
    if (file && synth) fail("trajectory", "give either file or synthetic, not both");
    if (file) {
      FileTrajectorySource src;
      src.path = get_string(*file, "trajectory.file", "path");
      const std::string fmt = get_string(*file, "trajectory.file", "format", "txy");
      if (fmt == "txy") {
        src.format = TrajectoryFormat::Txy;
      } else if (fmt == "ngsim") {
        src.format = TrajectoryFormat::Ngsim;
      } else {
        fail("trajectory.file.format", "expected 'txy' or 'ngsim'");
      }
      src.feet = get_bool(*file, "trajectory.file", "feet", false);
      cfg.file_source = src;
    } else if (synth) {
      cfg.synthetic.base_speed =
          get_number(*synth, "trajectory.synthetic", "base_speed", cfg.synthetic.base_speed);
      if (const json* comps = find(*synth, "components")) {
        if (!comps->is_array()) fail("trajectory.synthetic.components", "expected an array");
        cfg.synthetic.components.clear();
        int idx = 0;
        for (const auto& c : *comps) {
          const std::string path = "trajectory.synthetic.components[" + std::to_string(idx) + "]";
          SyntheticComponent sc;
          sc.amplitude = get_number(c, path, "amplitude");
          sc.period = get_number(c, path, "period");
          sc.phase = get_number(c, path, "phase", 0.0);
          cfg.synthetic.components.push_back(sc);
          ++idx;
        }
      }
    }
  }
  if (const json* o = find(j, "output_dir")) {
    if (!o->is_string()) fail("output_dir", "expected a string");
    cfg.output_dir = o->get<std::string>();
  }
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["platoon"]["size"] = cfg.platoon_size;
  j["traffic"]["density_kbar"] = cfg.traffic.density_kbar;
  j["traffic"]["comm_range_r_km"] = cfg.traffic.comm_range_r;
  j["traffic"]["contention_window"] = cfg.traffic.contention_window;
  j["controller"]["headway_h"] = cfg.controller.headway_h;
  j["controller"]["omega_k"]["cacc1"] = cfg.controller.omega_k[0];
  j["controller"]["omega_k"]["cacc2"] = cfg.controller.omega_k[1];
  j["controller"]["omega_k"]["cacc3"] = cfg.controller.omega_k[2];
  j["controller"]["omega_k"]["acc"] = cfg.controller.omega_k[3];
  j["controller"]["alpha"] = cfg.controller.alpha;
  j["controller"]["beta"] = cfg.controller.beta;
  j["controller"]["w_max"] = cfg.controller.w_max;
  j["controller"]["standstill_l"] = cfg.controller.standstill_l;
  if (cfg.coeffs) {
    j["contention_coeffs"]["k1"] = cfg.coeffs->k1;
    j["contention_coeffs"]["k2"] = cfg.coeffs->k2;
    j["contention_coeffs"]["k3"] = cfg.coeffs->k3;
  } else {
    j["contention_coeffs"] = nullptr;
  }
  j["sim"]["dt"] = cfg.sim.dt;
  j["sim"]["seed"] = cfg.sim.seed;
  j["sim"]["duration"] = cfg.sim.duration;
  j["sim"]["strategy"] = strategy_name(cfg.sim.strategy);
  j["sim"]["accel_min"] = cfg.sim.accel_min;
  j["sim"]["accel_max"] = cfg.sim.accel_max;
  j["sim"]["accel_limits_enabled"] = cfg.sim.accel_limits_enabled;
  j["sim"]["update_period_tau"] = cfg.sim.update_period_tau;
  j["sim"]["lead_time_delta_tau"] = cfg.sim.lead_time_delta_tau;
  if (cfg.sim.force_success_probability) {
    j["sim"]["force_success_probability"] = *cfg.sim.force_success_probability;
  } else {
    j["sim"]["force_success_probability"] = nullptr;
  }
  if (cfg.file_source) {
    j["trajectory"]["file"]["path"] = cfg.file_source->path.string();
    j["trajectory"]["file"]["format"] =
        cfg.file_source->format == TrajectoryFormat::Ngsim ? "ngsim" : "txy";
    j["trajectory"]["file"]["feet"] = cfg.file_source->feet;
  } else {
    j["trajectory"]["synthetic"]["base_speed"] = cfg.synthetic.base_speed;
    json comps = json::array();
    for (const auto& c : cfg.synthetic.components) {
      comps.push_back({{"amplitude", c.amplitude}, {"period", c.period}, {"phase", c.phase}});
    }
    j["trajectory"]["synthetic"]["components"] = comps;
  }
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace

ContentionCoefficients ExperimentConfig::effective_coeffs() const {
  return coeffs ? *coeffs : default_coefficients();
}

void ExperimentConfig::validate() const {
  if (platoon_size < 2) throw ValidationError("platoon.size: must be >= 2");
  if (platoon_size > 32) throw ValidationError("platoon.size: must be <= 32");
  traffic.validate();
  controller.validate();
  sim.validate();
  const int rho_max = std::min(2 * traffic.band_m() + 1, platoon_size);
  validate_coefficients(effective_coeffs(), traffic.contention_window, std::max(1, rho_max));
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse(j);
}

std::string config_to_json_text(const ExperimentConfig& config) {
  return to_json(config).dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("override '" + ov + "' must look like path.to.field=value");
    }
    std::string path_part = ov.substr(0, eq);
    const std::string value_part = ov.substr(eq + 1);
    std::replace(path_part.begin(), path_part.end(), '.', '/');
    json value;
    try {
      value = json::parse(value_part);
    } catch (const json::exception&) {
      value = value_part;  // plain string
    }
    try {
      const json::json_pointer ptr("/" + path_part);
      // the enclosing object must already exist, so typos do not silently
      // create ignored sections
      const json::json_pointer parent = ptr.parent_pointer();
      if (!parent.empty() && (!j.contains(parent) || !j.at(parent).is_object())) {
        const std::string dotted = ov.substr(0, eq);
        throw ValidationError("override '" + ov + "': no such config section '" +
                              dotted.substr(0, dotted.rfind('.')) + "'");
      }
      j[ptr] = value;
    } catch (const json::exception& e) {
      throw ValidationError("override '" + ov + "' failed: " + e.what());
    }
  }
  ExperimentConfig cfg = parse(j);
  cfg.validate();
  return cfg;
}

LeaderTrajectory make_leader(const ExperimentConfig& config) {
  if (config.file_source) {
    const auto records = load_trajectory(config.file_source->path, config.file_source->format,
                                         config.file_source->feet);
    LeaderTrajectory lt = leader_from_records(records, config.sim.dt);
    if (lt.duration() + 1e-9 < config.sim.duration) {
      throw ValidationError("trajectory.file: trajectory covers " +
                            std::to_string(lt.duration()) + " s but sim.duration is " +
                            std::to_string(config.sim.duration) + " s");
    }
    return lt;
  }
  return synthesize_leader(config.synthetic, config.sim.duration, config.sim.dt);
}

}  // namespace cacc
