// Copyright 2026 The hoverfg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON (de)serialization of scenario, estimator and ablation-row settings.
// Every field is optional on input; unknown keys are rejected.

#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hoverfg/eval.hpp"
#include "hoverfg/sim.hpp"

namespace hoverfg {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where)
      : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) {
      throw ConfigError(where_ + ": expected a JSON object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  void read(const char* key, Vec3& out) {
    std::vector<double> v;
    const bool present = j_.contains(key);
    read(key, v);
    if (!present) return;
    if (v.size() != 3) {
      throw ConfigError(where_ + "." + key + ": expected 3 numbers");
    }
    out = Vec3(v[0], v[1], v[2]);
  }

  template <typename F>
  void nested(const char* key, F&& f) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) f(*it, where_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

inline void from_json_checked(const Json& j, const std::string& where,
                              ImuNoiseDensity& d) {
  detail::ObjectReader r(j, where);
  r.read("accel", d.accel);
  r.read("gyro", d.gyro);
  r.finish();
}

inline Json to_json(const ImuNoiseDensity& d) {
  return {{"accel", d.accel}, {"gyro", d.gyro}};
}

inline ScenarioConfig scenario_from_json(const Json& j,
                                         const std::string& where = "scenario") {
  ScenarioConfig c;
  detail::ObjectReader r(j, where);
  r.read("duration", c.duration);
  r.read("keyframe_rate", c.keyframe_rate);
  r.read("imu_rate", c.imu_rate);
  r.read("lobe_radius", c.lobe_radius);
  r.read("path_period", c.path_period);
  r.read("uav_altitude_offset", c.uav_altitude_offset);
  r.nested("hover_windows", [&](const Json& w, const std::string& at) {
    if (!w.is_array()) throw ConfigError(at + ": expected an array");
    c.hover_windows.clear();
    for (const Json& e : w) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
          !e[1].is_number()) {
        throw ConfigError(at + ": each window is [start, end]");
      }
      c.hover_windows.push_back({e[0].get<double>(), e[1].get<double>()});
    }
  });
  r.read("hover_blend_time", c.hover_blend_time);
  r.read("hover_speed_cap", c.hover_speed_cap);
  r.read("tilt_gain", c.tilt_gain);
  r.read("rng_seed", c.rng_seed);
  r.nested("noise", [&](const Json& n, const std::string& at) {
    SensorNoise& s = c.noise;
    detail::ObjectReader nr(n, at);
    nr.read("pose_attitude", s.pose_attitude);
    nr.read("pose_position", s.pose_position);
    nr.read("ugv_position", s.ugv_position);
    nr.read("range", s.range);
    nr.read("altimeter", s.altimeter);
    nr.read("velocity", s.velocity);
    nr.nested("imu", [&](const Json& d, const std::string& a) {
      from_json_checked(d, a, s.imu);
    });
    nr.read("accel_bias_walk", s.accel_bias_walk);
    nr.read("gyro_bias_walk", s.gyro_bias_walk);
    nr.read("initial_accel_bias", s.initial_accel_bias);
    nr.read("initial_gyro_bias", s.initial_gyro_bias);
    nr.read("hover_wobble_speed", s.hover_wobble_speed);
    nr.finish();
  });
  r.nested("hover_detection", [&](const Json& h, const std::string& at) {
    detail::ObjectReader hr(h, at);
    hr.read("latency", c.hover_detection.latency);
    hr.read("false_negative_rate", c.hover_detection.false_negative_rate);
    hr.read("false_positive_rate", c.hover_detection.false_positive_rate);
    hr.finish();
  });
  r.nested("pose_prior_availability", [&](const Json& a, const std::string& at) {
    detail::ObjectReader ar(a, at);
    ar.read("fraction", c.pose_prior_availability.fraction);
    ar.read("period", c.pose_prior_availability.period);
    ar.finish();
  });
  r.finish();
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline Json to_json(const ScenarioConfig& c) {
  Json windows = Json::array();
  for (const HoverWindow& w : c.hover_windows) {
    windows.push_back(Json::array({w.start, w.end}));
  }
  const SensorNoise& n = c.noise;
  return {
      {"duration", c.duration},
      {"keyframe_rate", c.keyframe_rate},
      {"imu_rate", c.imu_rate},
      {"lobe_radius", c.lobe_radius},
      {"path_period", c.path_period},
      {"uav_altitude_offset", c.uav_altitude_offset},
      {"hover_windows", windows},
      {"hover_blend_time", c.hover_blend_time},
      {"hover_speed_cap", c.hover_speed_cap},
      {"tilt_gain", c.tilt_gain},
      {"rng_seed", c.rng_seed},
      {"noise",
       {{"pose_attitude", n.pose_attitude},
        {"pose_position", detail::vec_json(n.pose_position)},
        {"ugv_position", n.ugv_position},
        {"range", n.range},
        {"altimeter", n.altimeter},
        {"velocity", n.velocity},
        {"imu", to_json(n.imu)},
        {"accel_bias_walk", n.accel_bias_walk},
        {"gyro_bias_walk", n.gyro_bias_walk},
        {"initial_accel_bias", detail::vec_json(n.initial_accel_bias)},
        {"initial_gyro_bias", detail::vec_json(n.initial_gyro_bias)},
        {"hover_wobble_speed", n.hover_wobble_speed}}},
      {"hover_detection",
       {{"latency", c.hover_detection.latency},
        {"false_negative_rate", c.hover_detection.false_negative_rate},
        {"false_positive_rate", c.hover_detection.false_positive_rate}}},
      {"pose_prior_availability",
       {{"fraction", c.pose_prior_availability.fraction},
        {"period", c.pose_prior_availability.period}}},
  };
}

inline EstimatorConfig estimator_from_json(
    const Json& j, const std::string& where = "estimator") {
  EstimatorConfig c;
  detail::ObjectReader r(j, where);
  r.read("pose_attitude", c.pose_attitude);
  r.read("pose_position", c.pose_position);
  r.read("ugv_position", c.ugv_position);
  r.read("range", c.range);
  r.read("elevation", c.elevation);
  r.read("velocity", c.velocity);
  r.read("solve_interval", c.solve_interval);
  r.nested("imu", [&](const Json& m, const std::string& at) {
    detail::ObjectReader ir(m, at);
    std::string mode = c.imu.mode == ImuNoiseMode::Fixed ? "fixed" : "propagated";
    ir.read("mode", mode);
    if (mode == "fixed") {
      c.imu.mode = ImuNoiseMode::Fixed;
    } else if (mode == "propagated") {
      c.imu.mode = ImuNoiseMode::Propagated;
    } else {
      throw ConfigError(at + ".mode: expected 'fixed' or 'propagated'");
    }
    ir.read("attitude", c.imu.attitude);
    ir.read("position", c.imu.position);
    ir.read("velocity", c.imu.velocity);
    ir.read("accel_bias_walk", c.imu.accel_bias_walk);
    ir.read("gyro_bias_walk", c.imu.gyro_bias_walk);
    ir.nested("density", [&](const Json& d, const std::string& a) {
      from_json_checked(d, a, c.imu.density);
    });
    ir.finish();
  });
  r.nested("lm", [&](const Json& m, const std::string& at) {
    detail::ObjectReader lr(m, at);
    lr.read("max_iters", c.lm.max_iters);
    lr.read("lambda_init", c.lm.lambda_init);
    lr.read("cost_tol", c.lm.cost_tol);
    lr.read("delta_tol", c.lm.delta_tol);
    lr.read("lambda_max", c.lm.lambda_max);
    lr.read("abs_cost_tol", c.lm.abs_cost_tol);
    lr.finish();
  });
  r.finish();
  for (double s : {c.pose_attitude, c.pose_position.x(), c.pose_position.y(),
                   c.pose_position.z(), c.ugv_position, c.range, c.elevation,
                   c.velocity, c.imu.attitude, c.imu.position,
                   c.imu.velocity, c.imu.accel_bias_walk, c.imu.gyro_bias_walk,
                   c.imu.density.accel, c.imu.density.gyro}) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError(where + ": noise sigmas must be positive and finite");
    }
  }
  if (c.solve_interval < 1) throw ConfigError(where + ": solve_interval < 1");
  if (c.lm.max_iters < 1) throw ConfigError(where + ": lm.max_iters < 1");
  return c;
}

inline Json to_json(const EstimatorConfig& c) {
  return {
      {"pose_attitude", c.pose_attitude},
      {"pose_position", detail::vec_json(c.pose_position)},
      {"ugv_position", c.ugv_position},
      {"range", c.range},
      {"elevation", c.elevation},
      {"velocity", c.velocity},
      {"solve_interval", c.solve_interval},
      {"imu",
       {{"mode", c.imu.mode == ImuNoiseMode::Fixed ? "fixed" : "propagated"},
        {"attitude", c.imu.attitude},
        {"position", c.imu.position},
        {"velocity", c.imu.velocity},
        {"accel_bias_walk", c.imu.accel_bias_walk},
        {"gyro_bias_walk", c.imu.gyro_bias_walk},
        {"density", to_json(c.imu.density)}}},
      {"lm",
       {{"max_iters", c.lm.max_iters},
        {"lambda_init", c.lm.lambda_init},
        {"cost_tol", c.lm.cost_tol},
        {"delta_tol", c.lm.delta_tol},
        {"lambda_max", c.lm.lambda_max},
        {"abs_cost_tol", c.lm.abs_cost_tol}}},
  };
}

/// Top-level config file: {"scenario": {...}, "estimator": {...}}.
struct RunConfig {
  ScenarioConfig scenario;
  EstimatorConfig estimator;
};

inline RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  detail::ObjectReader r(j, "config");
  r.nested("scenario", [&](const Json& s, const std::string& at) {
    c.scenario = scenario_from_json(s, at);
  });
  r.nested("estimator", [&](const Json& e, const std::string& at) {
    c.estimator = estimator_from_json(e, at);
  });
  r.finish();
  if (!j.contains("scenario")) validate(c.scenario);
  return c;
}

inline Json to_json(const RunConfig& c) {
  return {{"scenario", to_json(c.scenario)},
          {"estimator", to_json(c.estimator)}};
}

inline Json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path) {
  try {
    return run_config_from_json(parse_json_file(path));
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + what);
  }
}

/// Rows file: [{"name": "...", "sensors": ["Imu", ...], "hover_sigma": 0.01}].
/// A missing name is generated from the sensor set.
inline std::vector<AblationRow> rows_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("rows: expected a JSON array");
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = "rows[" + std::to_string(i) + "]";
    detail::ObjectReader r(j[i], at);
    std::string name;
    std::vector<std::string> sensors;
    std::optional<double> sigma;
    r.read("name", name);
    r.read("sensors", sensors);
    r.nested("hover_sigma", [&](const Json& s, const std::string& a) {
      if (!s.is_number()) throw ConfigError(a + ": expected a number");
      sigma = s.get<double>();
    });
    r.finish();
    std::set<Sensor> set;
    try {
      for (const std::string& s : sensors) set.insert(sensor_from_string(s));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at + ": " + e.what());
    }
    AblationRow row = make_row(set, sigma);
    if (!name.empty()) row.name = name;
    try {
      validate(row);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const std::vector<AblationRow>& rows) {
  Json out = Json::array();
  for (const AblationRow& r : rows) {
    Json s = Json::array();
    for (Sensor x : kAllSensors) {
      if (r.has(x)) s.push_back(std::string(to_string(x)));
    }
    Json row{{"name", r.name}, {"sensors", s}};
    if (r.hover_sigma) row["hover_sigma"] = *r.hover_sigma;
    out.push_back(row);
  }
  return out;
}

}  // namespace hoverfg
