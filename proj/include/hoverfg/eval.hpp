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

// Sensor-combination ablation: runs the incremental estimator once per
// configuration row over a sensor log and scores it against ground truth.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoverfg/factors.hpp"
#include "hoverfg/graph.hpp"
#include "hoverfg/log.hpp"
#include "hoverfg/preintegration.hpp"
#include "hoverfg/sim.hpp"

namespace hoverfg {

enum class Sensor { Imu, PosePrior, Range, Altimeter, Hover, Velocity };

inline constexpr std::array<Sensor, 6> kAllSensors{
    Sensor::Imu,       Sensor::PosePrior, Sensor::Range,
    Sensor::Altimeter, Sensor::Hover,     Sensor::Velocity};

inline std::string_view to_string(Sensor s) {
  switch (s) {
    case Sensor::Imu: return "Imu";
    case Sensor::PosePrior: return "PosePrior";
    case Sensor::Range: return "Range";
    case Sensor::Altimeter: return "Altimeter";
    case Sensor::Hover: return "Hover";
    case Sensor::Velocity: return "Velocity";
  }
  return "?";
}

inline Sensor sensor_from_string(std::string_view s) {
  for (Sensor x : kAllSensors) {
    if (to_string(x) == s) return x;
  }
  throw std::invalid_argument("unknown sensor '" + std::string(s) + "'");
}

enum class ImuNoiseMode {
  Propagated,  // diagonal of the preintegrated covariance
  Fixed,       // constant per-block sigmas
};

struct ImuFactorNoise {
  ImuNoiseMode mode = ImuNoiseMode::Propagated;
  double attitude = 0.01;    // rad, Fixed mode
  double position = 0.35;    // m, Fixed mode
  double velocity = 0.1;     // m/s, Fixed mode
  double accel_bias_walk = 1e-3;  // per keyframe interval
  double gyro_bias_walk = 1e-3;   // per keyframe interval
  ImuNoiseDensity density;   // Propagated mode
};

/// Noise model and solver settings of the estimator.
struct EstimatorConfig {
  double pose_attitude = 0.1;             // rad
  Vec3 pose_position{0.01, 0.2, 0.2};     // m
  double ugv_position = 0.1;              // m
  double range = 0.1;                     // m
  double elevation = 0.1;                 // m
  double velocity = 0.02;                 // m/s
  ImuFactorNoise imu;
  LmSettings lm;
  int solve_interval = 10;  // keyframes added between incremental solves
};

struct AblationRow {
  std::string name;
  std::set<Sensor> sensors;
  std::optional<double> hover_sigma;

  bool has(Sensor s) const { return sensors.count(s) != 0; }
};

inline std::string format_sigma(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

/// "IMU + LiDAR + UWB + Altimeter + Hover (0.01) Updates" style label.
inline std::string row_label(const std::set<Sensor>& sensors,
                             std::optional<double> hover_sigma) {
  std::string out;
  const auto add = [&](const std::string& part) {
    if (!out.empty()) out += " + ";
    out += part;
  };
  if (sensors.count(Sensor::Imu)) add("IMU");
  if (sensors.count(Sensor::PosePrior)) add("LiDAR");
  if (sensors.count(Sensor::Range)) add("UWB");
  if (sensors.count(Sensor::Altimeter)) add("Altimeter");
  if (sensors.count(Sensor::Hover)) {
    add(hover_sigma ? "Hover (" + format_sigma(*hover_sigma) + ")" : "Hover");
  }
  if (sensors.count(Sensor::Velocity)) add("Velocity");
  return out + " Updates";
}

inline AblationRow make_row(std::set<Sensor> sensors,
                            std::optional<double> hover_sigma = std::nullopt) {
  AblationRow r{row_label(sensors, hover_sigma), std::move(sensors),
                hover_sigma};
  return r;
}

inline void validate(const AblationRow& r) {
  if (!r.has(Sensor::Imu)) {
    throw std::invalid_argument("row '" + r.name + "': IMU must be enabled");
  }
  if (r.has(Sensor::Hover) != r.hover_sigma.has_value()) {
    throw std::invalid_argument(
        "row '" + r.name + "': hover_sigma must be given iff Hover is enabled");
  }
  if (r.hover_sigma && !(*r.hover_sigma > 0.0)) {
    throw std::invalid_argument("row '" + r.name +
                                "': hover_sigma must be positive");
  }
}

/// The eight measurement-update combinations of the results tables.
inline std::vector<AblationRow> default_rows() {
  using S = Sensor;
  const std::set<S> base{S::Imu, S::PosePrior, S::Range, S::Altimeter};
  auto with = [&](std::initializer_list<S> extra) {
    std::set<S> s = base;
    s.insert(extra.begin(), extra.end());
    return s;
  };
  return {
      make_row({S::Imu, S::PosePrior}),
      make_row({S::Imu, S::PosePrior, S::Range}),
      make_row(base),
      make_row(with({S::Hover}), 0.01),
      make_row(with({S::Hover}), 0.05),
      make_row(with({S::Hover}), 0.1),
      make_row(with({S::Velocity})),
      make_row(with({S::Hover, S::Velocity}), 0.01),
  };
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

inline constexpr std::array<const char*, 7> kColumnNames{
    "North", "East", "Down", "3D", "Roll", "Pitch", "Yaw"};
inline constexpr std::array<const char*, 7> kColumnUnits{
    "m", "m", "m", "m", "rad", "rad", "rad"};

using Columns = std::array<double, 7>;
enum Column { kNorth, kEast, kDown, k3D, kRoll, kPitch, kYaw };

struct EpochError {
  double t = 0.0;
  Vec3 position = Vec3::Zero();  // estimate - truth, NED
  double position_3d = 0.0;
  Vec3 attitude = Vec3::Zero();  // wrapped roll/pitch/yaw differences
};

struct ErrorSummary {
  Columns rms{};
  Columns max{};
  std::vector<EpochError> series;
};

inline ErrorSummary compute_errors(const std::vector<double>& times,
                                   const std::vector<NavState>& estimate,
                                   const std::vector<NavState>& truth) {
  if (estimate.empty()) {
    throw std::invalid_argument("compute_errors: empty trajectory");
  }
  if (estimate.size() != truth.size() || times.size() != truth.size()) {
    throw std::invalid_argument("compute_errors: epoch sets differ");
  }
  ErrorSummary out;
  Columns sq{};
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    EpochError e;
    e.t = times[k];
    e.position = estimate[k].pose.translation - truth[k].pose.translation;
    e.position_3d = e.position.norm();
    const Rpy a = rotation_to_rpy(estimate[k].pose.rotation);
    const Rpy b = rotation_to_rpy(truth[k].pose.rotation);
    e.attitude = {wrap_angle(a.roll - b.roll), wrap_angle(a.pitch - b.pitch),
                  wrap_angle(a.yaw - b.yaw)};
    const Columns c{e.position.x(), e.position.y(), e.position.z(),
                    e.position_3d, e.attitude.x(), e.attitude.y(),
                    e.attitude.z()};
    for (std::size_t i = 0; i < c.size(); ++i) {
      sq[i] += c[i] * c[i];
      out.max[i] = std::max(out.max[i], std::abs(c[i]));
    }
    out.series.push_back(e);
  }
  for (std::size_t i = 0; i < sq.size(); ++i) {
    out.rms[i] = std::sqrt(sq[i] / static_cast<double>(estimate.size()));
  }
  return out;
}

inline ErrorSummary compute_errors(const std::vector<NavState>& estimate,
                                   const std::vector<NavState>& truth) {
  std::vector<double> times(truth.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    times[k] = static_cast<double>(k);
  }
  return compute_errors(times, estimate, truth);
}

// ---------------------------------------------------------------------------
// Estimator run
// ---------------------------------------------------------------------------

/// Log records bucketed by keyframe epoch.
struct EpochInputs {
  double t = 0.0;
  std::vector<ImuSample> imu;  // samples in [t_prev, t)
  std::optional<Pose3> pose;
  std::optional<double> range;
  std::optional<double> altitude;
  std::optional<Vec3> ugv;
  std::optional<Vec3> velocity;
  std::vector<std::pair<double, bool>> hover_edges;  // edges at or before t
};

inline std::vector<EpochInputs> bucket_log(
    const std::vector<SensorRecord>& log, const std::vector<double>& times) {
  constexpr double kEps = 1e-6;
  std::vector<EpochInputs> epochs(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) epochs[k].t = times[k];
  std::size_t k = 0;  // IMU cursor: samples in [t_{k-1}, t_k) feed epoch k
  for (const SensorRecord& r : log) {
    if (r.kind() == SensorKind::Imu) {
      while (k < times.size() && r.timestamp >= times[k] - 1e-9) ++k;
      if (k == 0 || k >= times.size()) continue;
      epochs[k].imu.push_back(std::get<ImuPayload>(r.payload).sample);
      continue;
    }
    if (r.kind() == SensorKind::HoverFlag) {
      // Applied just before the first epoch at or after the edge.
      const auto it = std::lower_bound(times.begin(), times.end(),
                                       r.timestamp - 1e-9);
      if (it == times.end()) continue;
      epochs[static_cast<std::size_t>(it - times.begin())]
          .hover_edges.emplace_back(
              r.timestamp, std::get<HoverFlagPayload>(r.payload).entering);
      continue;
    }
    const auto it = std::lower_bound(times.begin(), times.end(),
                                     r.timestamp - kEps);
    if (it == times.end() || std::abs(*it - r.timestamp) > kEps) continue;
    EpochInputs& e = epochs[static_cast<std::size_t>(it - times.begin())];
    std::visit(
        [&e](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, RangePayload>) {
            e.range = p.range;
          } else if constexpr (std::is_same_v<T, AltimeterPayload>) {
            e.altitude = p.altitude;
          } else if constexpr (std::is_same_v<T, PosePriorPayload>) {
            e.pose = p.pose;
          } else if constexpr (std::is_same_v<T, UgvPosePayload>) {
            e.ugv = p.position;
          } else if constexpr (std::is_same_v<T, VelocityPayload>) {
            e.velocity = p.velocity;
          }
        },
        r.payload);
  }
  return epochs;
}

inline DiagonalNoise imu_factor_noise(const PreintegratedImu& pre,
                                      const ImuFactorNoise& cfg) {
  Eigen::Matrix<double, 15, 1> s;
  if (cfg.mode == ImuNoiseMode::Fixed) {
    s.segment<3>(0).setConstant(cfg.attitude);
    s.segment<3>(3).setConstant(cfg.velocity);
    s.segment<3>(6).setConstant(cfg.position);
  } else {
    for (int i = 0; i < 9; ++i) {
      s[i] = std::sqrt(std::max(pre.covariance(i, i), 1e-24));
    }
  }
  s.segment<3>(9).setConstant(cfg.accel_bias_walk);
  s.segment<3>(12).setConstant(cfg.gyro_bias_walk);
  return DiagonalNoise(s);
}

struct RowResult {
  AblationRow row;
  std::vector<double> times;
  std::vector<NavState> estimate;
  ErrorSummary errors;
  std::vector<SolveReport> solves;
  bool divergent = false;
  std::string diagnostics;
};

/// Builds the graph for one row epoch by epoch, re-optimizing every
/// `solve_interval` keyframes and after the last one.
inline RowResult run_row(const std::vector<EpochInputs>& epochs,
                         const std::vector<NavState>& truth,
                         const AblationRow& row, const EstimatorConfig& cfg) {
  validate(row);
  RowResult out;
  out.row = row;
  FactorGraph graph;
  if (row.has(Sensor::Hover)) graph.enable_hover(*row.hover_sigma);
  const DiagonalNoise pose_noise([&] {
    Eigen::VectorXd s(6);
    s << Eigen::Vector3d::Constant(cfg.pose_attitude), cfg.pose_position;
    return s;
  }());
  const DiagonalNoise alt_noise = DiagonalNoise::isotropic(1, cfg.elevation);
  const DiagonalNoise range_noise = DiagonalNoise::isotropic(1, cfg.range);
  const DiagonalNoise ugv_noise = DiagonalNoise::isotropic(3, cfg.ugv_position);
  const DiagonalNoise vel_noise = DiagonalNoise::isotropic(3, cfg.velocity);
  const int interval = std::max(1, cfg.solve_interval);

  try {
    for (std::size_t k = 0; k < epochs.size(); ++k) {
      const EpochInputs& e = epochs[k];
      for (const auto& [t, entering] : e.hover_edges) {
        graph.hover_flag(t, entering);
      }
      const StateKey key = StateKey::uav(static_cast<long>(k), e.t);
      std::vector<NewState> states;
      std::vector<FactorSpec> factors;
      std::optional<NavState> initial;
      if (k == 0) {
        if (!e.pose) {
          throw std::runtime_error("first epoch has no pose prior to fix the gauge");
        }
        factors.push_back(make_pose_prior(key, *e.pose, pose_noise));
        NavState x0;
        x0.pose = *e.pose;
        if (row.has(Sensor::Velocity) && e.velocity) x0.velocity = *e.velocity;
        initial = x0;
      } else {
        const StateKey prev = StateKey::uav(static_cast<long>(k) - 1,
                                            epochs[k - 1].t);
        const NavState& xp = graph.value(prev);
        if (e.imu.empty()) {
          throw std::runtime_error("no IMU samples before keyframe at t=" +
                                   std::to_string(e.t));
        }
        PreintegratedImu pre = preintegrate(
            e.imu, ImuBias{xp.bias_accel, xp.bias_gyro}, cfg.imu.density);
        const DiagonalNoise n = imu_factor_noise(pre, cfg.imu);
        factors.push_back(make_imu(prev, key, std::move(pre), n));
        if (row.has(Sensor::PosePrior) && e.pose) {
          factors.push_back(make_pose_prior(key, *e.pose, pose_noise));
        }
      }
      if (row.has(Sensor::Altimeter) && e.altitude) {
        factors.push_back(make_elevation(key, *e.altitude, alt_noise));
      }
      if (row.has(Sensor::Range) && e.range && e.ugv) {
        const StateKey ugv = StateKey::ugv(static_cast<long>(k), e.t);
        states.push_back({ugv, NavState::at(*e.ugv)});
        factors.push_back(make_ugv_prior(ugv, *e.ugv, ugv_noise));
        factors.push_back(make_range(key, ugv, *e.range, range_noise));
      }
      if (row.has(Sensor::Velocity) && e.velocity) {
        factors.push_back(make_velocity_prior(key, *e.velocity, vel_noise));
      }
      states.push_back({key, initial});
      graph.add_epoch(states, std::move(factors));
      const bool last = k + 1 == epochs.size();
      if (k % static_cast<std::size_t>(interval) == 0 || last) {
        out.solves.push_back(optimize(graph, cfg.lm));
      }
    }
  } catch (const std::exception& ex) {
    out.divergent = true;
    out.diagnostics = ex.what();
  }

  for (const auto& [key, x] : graph.uav_trajectory()) {
    out.times.push_back(key.timestamp);
    out.estimate.push_back(x);
  }
  if (!out.divergent) {
    bool finite = true;
    for (const NavState& x : out.estimate) {
      finite = finite && x.pose.translation.allFinite() &&
               x.velocity.allFinite();
    }
    if (!finite) {
      out.divergent = true;
      out.diagnostics = "non-finite state estimate";
    } else if (!out.solves.empty() && !out.solves.back().converged) {
      out.diagnostics = "final solve: " + out.solves.back().message;
    }
  }
  if (!out.divergent) {
    try {
      out.errors = compute_errors(
          out.times, out.estimate,
          std::vector<NavState>(truth.begin(),
                                truth.begin() + static_cast<long>(
                                                    out.estimate.size())));
    } catch (const std::exception& ex) {
      out.divergent = true;
      out.diagnostics = ex.what();
    }
  }
  return out;
}

namespace detail {

[[noreturn]] inline void unknown_row(const std::string& name,
                                     const std::vector<std::string>& names) {
  std::string list;
  for (const std::string& n : names) {
    list += (list.empty() ? "'" : ", '") + n + "'";
  }
  throw std::invalid_argument("unknown row '" + name +
                              "'; available rows: " + list);
}

}  // namespace detail

inline const AblationRow& find_row(const std::vector<AblationRow>& rows,
                                   const std::string& name) {
  std::vector<std::string> names;
  for (const AblationRow& r : rows) {
    if (r.name == name) return r;
    names.push_back(r.name);
  }
  detail::unknown_row(name, names);
}

struct ErrorReport {
  std::vector<RowResult> rows;

  const RowResult& row(const std::string& name) const {
    std::vector<std::string> names;
    for (const RowResult& r : rows) {
      if (r.row.name == name) return r;
      names.push_back(r.row.name);
    }
    detail::unknown_row(name, names);
  }
};

inline ErrorReport run_ablation(const std::vector<SensorRecord>& log,
                                const std::vector<TruthEpoch>& truth,
                                const std::vector<AblationRow>& rows,
                                const EstimatorConfig& cfg) {
  ErrorReport report;
  if (rows.empty()) return report;
  for (const AblationRow& r : rows) validate(r);
  std::vector<double> times;
  std::vector<NavState> truth_states;
  for (const TruthEpoch& e : truth) {
    times.push_back(e.t);
    truth_states.push_back(e.uav);
  }
  const std::vector<EpochInputs> epochs = bucket_log(log, times);
  for (const AblationRow& r : rows) {
    report.rows.push_back(run_row(epochs, truth_states, r, cfg));
  }
  return report;
}

/// Simulates `seeds` scenarios (rng_seed, rng_seed + 1, ...) and runs the
/// rows on each.
inline std::vector<ErrorReport> run_ablation_seeds(
    const ScenarioConfig& scenario, const std::vector<AblationRow>& rows,
    const EstimatorConfig& cfg, int seeds) {
  std::vector<ErrorReport> out;
  ScenarioConfig sc = scenario;
  for (int i = 0; i < seeds; ++i) {
    sc.rng_seed = scenario.rng_seed + static_cast<std::uint64_t>(i);
    const GroundTruth truth = generate_truth(sc);
    out.push_back(run_ablation(simulate(truth), truth.epochs(), rows, cfg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Aggregated table: one entry per row, median over seeds.
struct ReportTable {
  std::vector<std::string> names;
  std::vector<Columns> rms;
  std::vector<Columns> max;
  std::vector<int> divergent;  // number of divergent seeds per row
  int seeds = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Column-wise median across seeds; divergent seeds are excluded (a row that
/// diverged on every seed reports NaN).
inline ReportTable aggregate(const std::vector<ErrorReport>& per_seed) {
  ReportTable t;
  t.seeds = static_cast<int>(per_seed.size());
  if (per_seed.empty()) return t;
  const std::size_t n_rows = per_seed.front().rows.size();
  for (std::size_t r = 0; r < n_rows; ++r) {
    t.names.push_back(per_seed.front().rows[r].row.name);
    Columns rms{}, mx{};
    int div = 0;
    for (std::size_t c = 0; c < 7; ++c) {
      std::vector<double> a, b;
      for (const ErrorReport& rep : per_seed) {
        const RowResult& rr = rep.rows.at(r);
        if (rr.divergent) continue;
        a.push_back(rr.errors.rms[c]);
        b.push_back(rr.errors.max[c]);
      }
      rms[c] = median(a);
      mx[c] = median(b);
    }
    for (const ErrorReport& rep : per_seed) div += rep.rows.at(r).divergent;
    t.rms.push_back(rms);
    t.max.push_back(mx);
    t.divergent.push_back(div);
  }
  return t;
}

inline ReportTable aggregate(const ErrorReport& single) {
  return aggregate(std::vector<ErrorReport>{single});
}

enum class ReportFormat { Csv, Markdown };
enum class Statistic { Rms, Max };

namespace detail {

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace detail

inline std::string render_csv(const ReportTable& t, Statistic stat) {
  std::string out = "Measurement Updates";
  for (const char* c : kColumnNames) out += std::string(",") + c;
  out += '\n';
  const auto& data = stat == Statistic::Rms ? t.rms : t.max;
  for (std::size_t r = 0; r < t.names.size(); ++r) {
    out += detail::csv_field(t.names[r]);
    for (double v : data[r]) out += "," + detail::fmt6(v);
    out += '\n';
  }
  return out;
}

inline std::string render_markdown(const ReportTable& t) {
  std::string out;
  const auto table = [&](const char* title, const std::vector<Columns>& data) {
    out += std::string("### ") + title + "\n\n| Measurement Updates |";
    for (std::size_t c = 0; c < kColumnNames.size(); ++c) {
      out += std::string(" ") + kColumnNames[c] + " (" + kColumnUnits[c] +
             ") |";
    }
    out += "\n|---|";
    for (std::size_t c = 0; c < kColumnNames.size(); ++c) out += "---|";
    out += '\n';
    for (std::size_t r = 0; r < t.names.size(); ++r) {
      out += "| " + t.names[r] + " |";
      for (double v : data[r]) out += " " + detail::fixed3(v) + " |";
      out += '\n';
    }
    out += '\n';
  };
  table("RMS error", t.rms);
  table("Max error", t.max);
  out += "Median over " + std::to_string(t.seeds) + " seed(s).\n";
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

/// Writes the report. CSV carries one statistic per file (RMS at `path`,
/// max at `<stem>_max.csv`); markdown holds both tables in one file.
inline void emit_report(const ReportTable& t, ReportFormat format,
                        const std::string& path) {
  if (format == ReportFormat::Markdown) {
    write_text(path, render_markdown(t));
    return;
  }
  write_text(path, render_csv(t, Statistic::Rms));
  std::string max_path = path;
  const auto dot = max_path.rfind('.');
  const auto slash = max_path.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    max_path.insert(dot, "_max");
  } else {
    max_path += "_max";
  }
  write_text(max_path, render_csv(t, Statistic::Max));
}

inline std::string render_trajectory(const RowResult& r,
                                     const std::vector<TruthEpoch>& truth) {
  std::string out =
      "t,truth_n,truth_e,truth_d,est_n,est_e,est_d,truth_roll,truth_pitch,"
      "truth_yaw,est_roll,est_pitch,est_yaw\n";
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < r.estimate.size() && k < truth.size(); ++k) {
    const NavState& x = r.estimate[k];
    const NavState& y = truth[k].uav;
    const Rpy a = rotation_to_rpy(y.pose.rotation);
    const Rpy b = rotation_to_rpy(x.pose.rotation);
    out += num(r.times[k]);
    for (int i = 0; i < 3; ++i) out += "," + num(y.pose.translation[i]);
    for (int i = 0; i < 3; ++i) out += "," + num(x.pose.translation[i]);
    for (double v : {a.roll, a.pitch, a.yaw, b.roll, b.pitch, b.yaw}) {
      out += "," + num(v);
    }
    out += '\n';
  }
  return out;
}

/// Per-epoch truth/estimate CSV for one row, for external plotting.
inline void emit_trajectory_dump(const ErrorReport& report,
                                 const std::vector<TruthEpoch>& truth,
                                 const std::string& row_name,
                                 const std::string& path) {
  write_text(path, render_trajectory(report.row(row_name), truth));
}

}  // namespace hoverfg
