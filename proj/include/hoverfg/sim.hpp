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

// Synthetic cooperative UAV/UGV scenario: a ground vehicle drives a
// figure-8 while the UAV tracks it from above, stopping to hover inside
// configured windows. Sensor streams are derived from the analytic truth.

#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hoverfg/geometry.hpp"
#include "hoverfg/preintegration.hpp"

namespace hoverfg {

struct HoverWindow {
  double start = 0.0;
  double end = 0.0;
};

/// True sensor noise used to corrupt the synthesized streams. A zero sigma
/// disables the corresponding noise.
struct SensorNoise {
  double pose_attitude = 0.1;                 // rad
  Vec3 pose_position{0.01, 0.2, 0.2};         // m (N, E, D)
  double ugv_position = 0.1;                  // m
  double range = 0.1;                         // m
  double altimeter = 0.1;                     // m
  double velocity = 0.02;                     // m/s
  ImuNoiseDensity imu;                        // white noise densities
  double accel_bias_walk = 1e-3;              // m/s^2/sqrt(s)
  double gyro_bias_walk = 1e-4;               // rad/s/sqrt(s)
  Vec3 initial_accel_bias{0.05, -0.04, 0.03}; // m/s^2
  Vec3 initial_gyro_bias{0.002, -0.0015, 0.001};  // rad/s
  double hover_wobble_speed = 0.015;          // m/s, residual hover motion

  static SensorNoise none() {
    SensorNoise n;
    n.pose_attitude = 0.0;
    n.pose_position.setZero();
    n.ugv_position = n.range = n.altimeter = n.velocity = 0.0;
    n.imu = {0.0, 0.0};
    n.accel_bias_walk = n.gyro_bias_walk = 0.0;
    n.initial_accel_bias.setZero();
    n.initial_gyro_bias.setZero();
    n.hover_wobble_speed = 0.0;
    return n;
  }
};

struct HoverDetection {
  double latency = 0.0;              // s, delays both edges
  double false_negative_rate = 0.0;  // probability a window goes unflagged
  double false_positive_rate = 0.0;  // per keyframe outside hover windows
};

/// LiDAR/VO outages: within each `period`, pose priors are available for the
/// first `fraction * period` seconds. With the period equal to the run
/// duration, tracking is lost once and never regained.
struct PosePriorAvailability {
  double fraction = 1.0;
  double period = 150.0;

  bool available(double t) const {
    if (fraction >= 1.0) return true;
    return std::fmod(t, period) < fraction * period - 1e-9;
  }
};

struct ScenarioConfig {
  double duration = 150.0;      // s
  double keyframe_rate = 10.0;  // Hz
  double imu_rate = 200.0;      // Hz
  double lobe_radius = 2.0;     // m
  double path_period = 40.0;    // s
  double uav_altitude_offset = 2.0;  // m above the UGV
  std::vector<HoverWindow> hover_windows{{30.0, 40.0}, {70.0, 80.0},
                                         {110.0, 120.0}};
  double hover_blend_time = 3.0;   // s, outside each window
  double hover_speed_cap = 0.02;   // m/s
  double tilt_gain = 1.0;
  SensorNoise noise;
  HoverDetection hover_detection;
  PosePriorAvailability pose_prior_availability;
  std::uint64_t rng_seed = 1;

  int imu_per_keyframe() const {
    return static_cast<int>(std::lround(imu_rate / keyframe_rate));
  }
  long num_keyframes() const {
    return std::lround(duration * keyframe_rate) + 1;
  }
  double keyframe_time(long k) const {
    return static_cast<double>(k) / keyframe_rate;
  }
};

inline void validate(const ScenarioConfig& c) {
  const auto fail = [](const std::string& why) {
    throw std::invalid_argument("scenario config: " + why);
  };
  if (!(c.duration > 0.0)) fail("duration must be positive");
  if (!(c.keyframe_rate > 0.0) || !(c.imu_rate > 0.0)) {
    fail("rates must be positive");
  }
  const double ratio = c.imu_rate / c.keyframe_rate;
  if (ratio < 2.0 - 1e-9) fail("imu_rate must be at least 2x keyframe_rate");
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    fail("imu_rate must be an integer multiple of keyframe_rate");
  }
  if (!(c.lobe_radius > 0.0) || !(c.path_period > 0.0)) {
    fail("figure-8 parameters must be positive");
  }
  if (!(c.hover_blend_time > 0.0)) fail("hover blend time must be positive");
  if (!(c.hover_speed_cap > 0.0)) fail("hover speed cap must be positive");
  if (c.noise.hover_wobble_speed < 0.0 ||
      c.noise.hover_wobble_speed > c.hover_speed_cap) {
    fail("hover wobble speed must lie in [0, hover_speed_cap]");
  }
  const auto& n = c.noise;
  for (double s : {n.pose_attitude, n.pose_position.x(), n.pose_position.y(),
                   n.pose_position.z(), n.ugv_position, n.range, n.altimeter,
                   n.velocity, n.imu.accel, n.imu.gyro, n.accel_bias_walk,
                   n.gyro_bias_walk}) {
    if (!(s >= 0.0) || !std::isfinite(s)) fail("sigmas must be >= 0");
  }
  if (!(c.pose_prior_availability.fraction > 0.0) ||
      c.pose_prior_availability.fraction > 1.0 ||
      !(c.pose_prior_availability.period > 0.0)) {
    fail("pose prior availability must be in (0, 1] with positive period");
  }
  std::vector<HoverWindow> w = c.hover_windows;
  std::sort(w.begin(), w.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  double prev_end = -std::numeric_limits<double>::infinity();
  for (const HoverWindow& h : w) {
    if (!(h.end > h.start)) fail("hover window must have end > start");
    if (h.end - h.start < 2.0 * c.hover_blend_time) {
      fail("hover window shorter than twice the blend time");
    }
    // The exit blend of a window that closes the run is never sampled.
    if (h.start - c.hover_blend_time < 0.0 ||
        (h.end + c.hover_blend_time > c.duration && h.end < c.duration - 1e-9) ||
        h.end > c.duration + 1e-9) {
      fail("hover window (with blends) must lie within [0, duration]");
    }
    if (h.start - c.hover_blend_time < prev_end) {
      fail("hover windows (with blends) must be disjoint");
    }
    prev_end = h.end + c.hover_blend_time;
  }
}

struct Kinematics {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

struct TruthEpoch {
  double t = 0.0;
  NavState uav;
  Vec3 ugv = Vec3::Zero();
};

/// Analytic trajectories plus the sampled keyframe states. IMU biases are a
/// seeded random walk sampled at the IMU rate.
class GroundTruth {
 public:
  GroundTruth() = default;

  explicit GroundTruth(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    std::sort(cfg_.hover_windows.begin(), cfg_.hover_windows.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });
    for (const HoverWindow& w : cfg_.hover_windows) {
      holds_.push_back(track(w.start).p);
      hold_yaw_.push_back(track_yaw(w.start));
    }
    generate_biases();
    for (long k = 0; k < cfg_.num_keyframes(); ++k) {
      const double t = cfg_.keyframe_time(k);
      epochs_.push_back({t, uav_state(t, bias_at_sample(k * cfg_.imu_per_keyframe())),
                         ugv(t).p});
    }
  }

  const ScenarioConfig& config() const { return cfg_; }
  const std::vector<TruthEpoch>& epochs() const { return epochs_; }

  /// Lissajous figure-8 on the ground plane (down = 0).
  Kinematics ugv(double t) const {
    const double R = cfg_.lobe_radius;
    const double w = 2.0 * std::numbers::pi / cfg_.path_period;
    Kinematics k;
    k.p = {2.0 * R * std::sin(w * t), R * std::sin(2.0 * w * t), 0.0};
    k.v = {2.0 * R * w * std::cos(w * t), 2.0 * R * w * std::cos(2.0 * w * t),
           0.0};
    k.a = {-2.0 * R * w * w * std::sin(w * t),
           -4.0 * R * w * w * std::sin(2.0 * w * t), 0.0};
    return k;
  }

  Kinematics uav(double t) const {
    const Kinematics tr = track(t);
    Kinematics out = tr;
    for (std::size_t i = 0; i < cfg_.hover_windows.size(); ++i) {
      const Blend b = blend(i, t);
      if (b.w == 0.0 && b.dw == 0.0 && b.ddw == 0.0) continue;
      const Vec3 d = holds_[i] - tr.p;
      out.p = (1.0 - b.w) * tr.p + b.w * holds_[i];
      out.v = (1.0 - b.w) * tr.v + b.dw * d;
      out.a = (1.0 - b.w) * tr.a - 2.0 * b.dw * tr.v + b.ddw * d;
      const Kinematics wob = wobble(i, t);
      out.p += wob.p;
      out.v += wob.v;
      out.a += wob.a;
      break;
    }
    return out;
  }

  /// Yaw follows the path tangent (frozen while hovering); roll and pitch
  /// are a small-angle tilt proportional to the horizontal acceleration.
  Rotation3 uav_attitude(double t) const {
    double yaw = track_yaw(t);
    for (std::size_t i = 0; i < cfg_.hover_windows.size(); ++i) {
      const Blend b = blend(i, t);
      if (b.w == 0.0) continue;
      yaw = (1.0 - b.w) * yaw + b.w * hold_yaw_[i];
      break;
    }
    const Vec3 a = uav(t).a;
    const double g = ned_gravity().z();
    const double a_fwd = std::cos(yaw) * a.x() + std::sin(yaw) * a.y();
    const double a_lat = -std::sin(yaw) * a.x() + std::cos(yaw) * a.y();
    const double pitch = -std::atan(cfg_.tilt_gain * a_fwd / g);
    const double roll = std::atan(cfg_.tilt_gain * a_lat / g);
    return Rotation3::from_rpy(roll, pitch, yaw);
  }

  NavState uav_state(double t, const ImuBias& bias = {}) const {
    const Kinematics k = uav(t);
    NavState s;
    s.pose.rotation = uav_attitude(t);
    s.pose.translation = k.p;
    s.velocity = k.v;
    s.bias_accel = bias.accel;
    s.bias_gyro = bias.gyro;
    return s;
  }

  bool in_hover_window(double t) const {
    return std::any_of(cfg_.hover_windows.begin(), cfg_.hover_windows.end(),
                       [t](const HoverWindow& w) {
                         return t >= w.start - 1e-9 && t <= w.end + 1e-9;
                       });
  }

  /// True IMU bias at IMU sample index j.
  ImuBias bias_at_sample(long j) const {
    const auto idx = static_cast<std::size_t>(
        std::clamp<long>(j, 0, static_cast<long>(biases_.size()) - 1));
    return biases_[idx];
  }

 private:
  struct Blend {
    double w = 0.0, dw = 0.0, ddw = 0.0;
  };

  Kinematics track(double t) const {
    Kinematics k = ugv(t);
    k.p.z() -= cfg_.uav_altitude_offset;
    return k;
  }

  /// Continuous heading of the figure-8 tangent. The lemniscate's heading
  /// stays within (-270, 90) degrees, so measuring it from West avoids the
  /// atan2 branch cut.
  double track_yaw(double t) const {
    const Vec3 v = ugv(t).v;
    return std::atan2(v.x(), -v.y()) - std::numbers::pi / 2.0;
  }

  Blend blend(std::size_t i, double t) const {
    const HoverWindow& h = cfg_.hover_windows[i];
    const double bt = cfg_.hover_blend_time;
    const auto smooth = [bt](double u, Blend& b, double sign) {
      b.w = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
      b.dw = sign * 30.0 * u * u * (1.0 - u) * (1.0 - u) / bt;
      b.ddw = 60.0 * u * (1.0 - 3.0 * u + 2.0 * u * u) / (bt * bt);
    };
    Blend b;
    if (t <= h.start - bt || t >= h.end + bt) return b;
    if (t >= h.start && t <= h.end) {
      b.w = 1.0;
      return b;
    }
    if (t < h.start) {
      smooth((t - (h.start - bt)) / bt, b, 1.0);
      return b;
    }
    smooth((t - h.end) / bt, b, -1.0);
    b.w = 1.0 - b.w;
    b.ddw = -b.ddw;
    return b;
  }

  /// Residual hover motion: sin^3 envelope times incommensurate sinusoids,
  /// vanishing with its first two derivatives at the window edges.
  Kinematics wobble(std::size_t i, double t) const {
    Kinematics k;
    const HoverWindow& h = cfg_.hover_windows[i];
    if (cfg_.noise.hover_wobble_speed <= 0.0 || t <= h.start || t >= h.end) {
      return k;
    }
    constexpr double kPi = std::numbers::pi;
    const double L = h.end - h.start;
    const double tau = t - h.start;
    const Vec3 periods{5.0, 7.0, 3.0};
    const Vec3 gains{1.0, 1.0, 0.5};
    const Vec3 freq = (2.0 * kPi) * periods.cwiseInverse();
    // Speed bound: |env'| |s| + |env| |s'|.
    const double env_rate_max = 3.0 * kPi / L * 2.0 / (3.0 * std::sqrt(3.0));
    const double amp = cfg_.noise.hover_wobble_speed /
                       (env_rate_max * gains.norm() +
                        gains.cwiseProduct(freq).norm());
    const double x = kPi * tau / L;
    const double sx = std::sin(x), cx = std::cos(x);
    const double env = sx * sx * sx;
    const double denv = 3.0 * kPi / L * sx * sx * cx;
    const double ddenv =
        3.0 * (kPi / L) * (kPi / L) * (2.0 * sx * cx * cx - sx * sx * sx);
    for (int a = 0; a < 3; ++a) {
      const double s = amp * gains[a] * std::sin(freq[a] * tau);
      const double ds = amp * gains[a] * freq[a] * std::cos(freq[a] * tau);
      const double dds = -amp * gains[a] * freq[a] * freq[a] *
                         std::sin(freq[a] * tau);
      k.p[a] = env * s;
      k.v[a] = denv * s + env * ds;
      k.a[a] = ddenv * s + 2.0 * denv * ds + env * dds;
    }
    return k;
  }

  void generate_biases() {
    const long n = cfg_.num_keyframes() * cfg_.imu_per_keyframe() + 1;
    std::mt19937_64 rng(stream_seed(cfg_.rng_seed, 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = 1.0 / cfg_.imu_rate;
    ImuBias b{cfg_.noise.initial_accel_bias, cfg_.noise.initial_gyro_bias};
    biases_.reserve(static_cast<std::size_t>(n));
    for (long j = 0; j < n; ++j) {
      biases_.push_back(b);
      for (int a = 0; a < 3; ++a) {
        b.accel[a] += cfg_.noise.accel_bias_walk * std::sqrt(dt) * normal(rng);
        b.gyro[a] += cfg_.noise.gyro_bias_walk * std::sqrt(dt) * normal(rng);
      }
    }
  }

 public:
  /// Independent, reproducible RNG stream per purpose.
  static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t parts[2];
    seq.generate(parts, parts + 2);
    return (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
  }

 private:
  ScenarioConfig cfg_;
  std::vector<Vec3> holds_;
  std::vector<double> hold_yaw_;
  std::vector<ImuBias> biases_;
  std::vector<TruthEpoch> epochs_;
};

inline GroundTruth generate_truth(const ScenarioConfig& cfg) {
  return GroundTruth(cfg);
}

// ---------------------------------------------------------------------------
// Sensor records
// ---------------------------------------------------------------------------

enum class SensorKind {
  Imu,
  Range,
  Altimeter,
  PosePrior,
  UgvPose,
  Velocity,
  HoverFlag,
};

struct ImuPayload {
  ImuSample sample;
};
struct RangePayload {
  double range = 0.0;
};
struct AltimeterPayload {
  double altitude = 0.0;
};
struct PosePriorPayload {
  Pose3 pose;
};
struct UgvPosePayload {
  Vec3 position = Vec3::Zero();
};
struct VelocityPayload {
  Vec3 velocity = Vec3::Zero();
};
struct HoverFlagPayload {
  bool entering = false;
};

using SensorPayload =
    std::variant<ImuPayload, RangePayload, AltimeterPayload, PosePriorPayload,
                 UgvPosePayload, VelocityPayload, HoverFlagPayload>;

struct SensorRecord {
  double timestamp = 0.0;
  SensorPayload payload;

  SensorKind kind() const { return static_cast<SensorKind>(payload.index()); }
};

/// Orders by timestamp, then by sensor kind, keeping insertion order for
/// ties.
inline void sort_records(std::vector<SensorRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const SensorRecord& a, const SensorRecord& b) {
                     if (a.timestamp != b.timestamp) {
                       return a.timestamp < b.timestamp;
                     }
                     return a.payload.index() < b.payload.index();
                   });
}

/// IMU samples consistent with the piecewise-constant integration model:
/// integrating them from a true keyframe state (true bias removed)
/// reproduces the next true keyframe state.
inline std::vector<SensorRecord> synthesize_imu(const GroundTruth& truth) {
  const ScenarioConfig& cfg = truth.config();
  const int m = cfg.imu_per_keyframe();
  const double dt = 1.0 / cfg.imu_rate;
  const Vec3 g = ned_gravity();
  std::mt19937_64 rng(GroundTruth::stream_seed(cfg.rng_seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double accel_sd = cfg.noise.imu.accel / std::sqrt(dt);
  const double gyro_sd = cfg.noise.imu.gyro / std::sqrt(dt);

  std::vector<SensorRecord> out;
  const long n_intervals = cfg.num_keyframes() - 1;
  out.reserve(static_cast<std::size_t>(n_intervals * m));
  std::vector<ImuSample> clean(static_cast<std::size_t>(m));
  for (long k = 0; k < n_intervals; ++k) {
    const long j0 = k * m;
    std::vector<Rotation3> R(static_cast<std::size_t>(m) + 1);
    std::vector<Vec3> v(static_cast<std::size_t>(m) + 1);
    for (int s = 0; s <= m; ++s) {
      const double t = static_cast<double>(j0 + s) / cfg.imu_rate;
      R[static_cast<std::size_t>(s)] = truth.uav_attitude(t);
      v[static_cast<std::size_t>(s)] = truth.uav(t).v;
    }
    for (int s = 0; s < m; ++s) {
      const auto i = static_cast<std::size_t>(s);
      const Vec3 phi = log_so3(R[i].inverse() * R[i + 1]);
      clean[i].dt = dt;
      clean[i].gyro = phi / dt;
      clean[i].accel = left_jacobian(phi).inverse() *
                       R[i].unrotate(v[i + 1] - v[i] - g * dt) / dt;
    }
    // Close the position gap left by the per-step velocity match using the
    // first and last sample of the interval.
    const double t0 = static_cast<double>(j0) / cfg.imu_rate;
    const double t1 = static_cast<double>(j0 + m) / cfg.imu_rate;
    const NavState x0 = truth.uav_state(t0);
    const NavState x1 = truth.uav_state(t1);
    const NavState pred = predict(x0, preintegrate(clean), g);
    Eigen::Matrix<double, 6, 1> eps;
    eps << x1.velocity - pred.velocity,
        x1.pose.translation - pred.pose.translation;
    const double T = m * dt;
    const auto response = [&](int s) {
      const auto i = static_cast<std::size_t>(s);
      const Vec3 phi = clean[i].gyro * dt;
      const Mat3 Rm = R[i].matrix();
      const double remaining = T - (s + 1) * dt;
      Eigen::Matrix<double, 6, 3> M;
      M.topRows<3>() = Rm * left_jacobian(phi) * dt;
      M.bottomRows<3>() = Rm * double_integral_jacobian(phi) * dt * dt +
                          Rm * left_jacobian(phi) * dt * remaining;
      return M;
    };
    Eigen::Matrix<double, 6, 6> A;
    A.leftCols<3>() = response(0);
    A.rightCols<3>() = response(m - 1);
    const Eigen::Matrix<double, 6, 1> fix = A.partialPivLu().solve(eps);
    clean[0].accel += fix.head<3>();
    clean[static_cast<std::size_t>(m) - 1].accel += fix.tail<3>();

    for (int s = 0; s < m; ++s) {
      const auto i = static_cast<std::size_t>(s);
      const ImuBias b = truth.bias_at_sample(j0 + s);
      ImuSample meas = clean[i];
      for (int a = 0; a < 3; ++a) {
        meas.accel[a] += b.accel[a] + accel_sd * normal(rng);
        meas.gyro[a] += b.gyro[a] + gyro_sd * normal(rng);
      }
      out.push_back({static_cast<double>(j0 + s) / cfg.imu_rate,
                     ImuPayload{meas}});
    }
  }
  return out;
}

/// Per-keyframe exteroceptive measurements and hover-flag edges.
inline std::vector<SensorRecord> synthesize_measurements(
    const GroundTruth& truth) {
  const ScenarioConfig& cfg = truth.config();
  const SensorNoise& n = cfg.noise;
  std::mt19937_64 rng(GroundTruth::stream_seed(cfg.rng_seed, 3));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto gauss3 = [&](const Vec3& sd) {
    Vec3 out;
    for (int a = 0; a < 3; ++a) out[a] = sd[a] * normal(rng);
    return out;
  };

  std::vector<SensorRecord> out;
  for (const TruthEpoch& e : truth.epochs()) {
    const Vec3& p = e.uav.pose.translation;
    // Draw every stream every epoch so that masks do not shift the noise.
    const double range_noise = n.range * normal(rng);
    const double alt_noise = n.altimeter * normal(rng);
    const Vec3 att_noise = gauss3(Vec3::Constant(n.pose_attitude));
    const Vec3 pos_noise = gauss3(n.pose_position);
    const Vec3 ugv_noise = gauss3(Vec3::Constant(n.ugv_position));
    const Vec3 vel_noise = gauss3(Vec3::Constant(n.velocity));

    out.push_back({e.t, RangePayload{(p - e.ugv).norm() + range_noise}});
    out.push_back({e.t, AltimeterPayload{-p.z() + alt_noise}});
    if (cfg.pose_prior_availability.available(e.t)) {
      Pose3 z;
      z.rotation = e.uav.pose.rotation * exp_so3(att_noise);
      z.translation = p + pos_noise;
      out.push_back({e.t, PosePriorPayload{z}});
    }
    out.push_back({e.t, UgvPosePayload{e.ugv + ugv_noise}});
    out.push_back({e.t, VelocityPayload{e.uav.velocity + vel_noise}});
  }

  // Hover flags: latency-shifted window edges, missed windows and spurious
  // one-keyframe detections.
  std::mt19937_64 flag_rng(GroundTruth::stream_seed(cfg.rng_seed, 4));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const HoverDetection& det = cfg.hover_detection;
  std::vector<std::pair<double, double>> flagged;
  for (const HoverWindow& w : cfg.hover_windows) {
    const bool missed = uniform(flag_rng) < det.false_negative_rate;
    if (missed) continue;
    flagged.emplace_back(std::min(w.start + det.latency, cfg.duration),
                         std::min(w.end + det.latency, cfg.duration));
  }
  const double period = 1.0 / cfg.keyframe_rate;
  for (const TruthEpoch& e : truth.epochs()) {
    const bool spurious = uniform(flag_rng) < det.false_positive_rate;
    if (!spurious) continue;
    const bool near_window = std::any_of(
        cfg.hover_windows.begin(), cfg.hover_windows.end(),
        [&](const HoverWindow& w) {
          return e.t >= w.start - period &&
                 e.t <= w.end + det.latency + period;
        });
    if (near_window || e.t + 0.5 * period > cfg.duration) continue;
    flagged.emplace_back(e.t, e.t + 0.5 * period);
  }
  std::sort(flagged.begin(), flagged.end());
  for (const auto& [start, end] : flagged) {
    out.push_back({start, HoverFlagPayload{true}});
    out.push_back({end, HoverFlagPayload{false}});
  }
  sort_records(out);
  return out;
}

/// Complete sorted sensor log for a scenario.
inline std::vector<SensorRecord> simulate(const GroundTruth& truth) {
  std::vector<SensorRecord> log = synthesize_imu(truth);
  std::vector<SensorRecord> meas = synthesize_measurements(truth);
  log.insert(log.end(), std::make_move_iterator(meas.begin()),
             std::make_move_iterator(meas.end()));
  sort_records(log);
  return log;
}

}  // namespace hoverfg
