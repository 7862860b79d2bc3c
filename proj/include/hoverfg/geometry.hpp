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

// Rotations, poses and navigation states in a North-East-Down world frame.
//
// Attitude is a unit quaternion; tangent updates are right-multiplied,
// R <- R * exp(delta). Translational blocks (position, velocity, biases)
// live in world coordinates and update additively.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hoverfg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vector15 = Eigen::Matrix<double, 15, 1>;

/// Thrown when a geometric quantity cannot be extracted (gimbal lock,
/// singular line of sight and similar degenerate configurations).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Standard gravity in NED, pointing down.
inline Vec3 ned_gravity() { return {0.0, 0.0, 9.81}; }

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::remainder(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

/// Unit quaternion rotation. Stored with w >= 0.
class Rotation3 {
 public:
  Rotation3() : q_(Eigen::Quaterniond::Identity()) {}

  /// Normalizes and canonicalizes the given quaternion.
  explicit Rotation3(const Eigen::Quaterniond& q) : q_(q.normalized()) {
    if (q_.w() < 0.0) q_.coeffs() = -q_.coeffs();
  }

  Rotation3(double w, double x, double y, double z)
      : Rotation3(Eigen::Quaterniond(w, x, y, z)) {}

  static Rotation3 identity() { return {}; }

  /// Keeps the coefficients bit-exact when they are already unit length
  /// (within 1e-12); used when reading serialized rotations.
  static Rotation3 from_unit_quaternion(const Eigen::Quaterniond& q) {
    if (std::abs(q.norm() - 1.0) > 1e-12) return Rotation3(q);
    Rotation3 r;
    r.q_ = q;
    if (r.q_.w() < 0.0) r.q_.coeffs() = -r.q_.coeffs();
    return r;
  }

  static Rotation3 from_matrix(const Mat3& m) {
    return Rotation3(Eigen::Quaterniond(m));
  }

  /// ZYX (yaw-pitch-roll) composition: Rz(yaw) * Ry(pitch) * Rx(roll).
  static Rotation3 from_rpy(double roll, double pitch, double yaw) {
    const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                                 Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                                 Eigen::AngleAxisd(roll, Vec3::UnitX());
    return Rotation3(q);
  }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation3 inverse() const { return Rotation3(q_.conjugate()); }
  Vec3 rotate(const Vec3& v) const { return q_ * v; }
  Vec3 unrotate(const Vec3& v) const { return q_.conjugate() * v; }

  Rotation3 operator*(const Rotation3& other) const {
    return Rotation3(q_ * other.q_);
  }
  Vec3 operator*(const Vec3& v) const { return rotate(v); }

  /// Equality up to the quaternion double cover.
  bool is_approx(const Rotation3& other, double tol = 1e-12) const {
    return (q_.coeffs() - other.q_.coeffs()).cwiseAbs().maxCoeff() <= tol ||
           (q_.coeffs() + other.q_.coeffs()).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  Eigen::Quaterniond q_;
};

inline Rotation3 exp_so3(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  double half_sinc;  // sin(theta/2) / theta
  double c;
  if (theta < 1e-4) {
    half_sinc = 0.5 - theta2 / 48.0 + theta2 * theta2 / 3840.0;
    c = 1.0 - theta2 / 8.0 + theta2 * theta2 / 384.0;
  } else {
    half_sinc = std::sin(0.5 * theta) / theta;
    c = std::cos(0.5 * theta);
  }
  return Rotation3(Eigen::Quaterniond(c, half_sinc * omega.x(),
                                      half_sinc * omega.y(),
                                      half_sinc * omega.z()));
}

struct LogResult {
  Vec3 omega;
  bool degenerate = false;  // rotation angle within 1e-7 of pi
};

/// Rotation vector with angle in [0, pi]. At exactly pi the axis sign is
/// chosen so that its first non-negligible component is positive.
inline LogResult log_so3_checked(const Rotation3& r) {
  const Eigen::Quaterniond& q = r.quaternion();  // w >= 0
  const Vec3 v(q.x(), q.y(), q.z());
  const double n = v.norm();
  const double w = q.w();
  LogResult out;
  if (n < 1e-8) {
    // atan2(n, w) / n ~ (1/w) (1 - n^2 / (3 w^2))
    const double scale = 2.0 / w * (1.0 - n * n / (3.0 * w * w));
    out.omega = scale * v;
    return out;
  }
  const double angle = 2.0 * std::atan2(n, w);
  Vec3 axis = v / n;
  if (std::numbers::pi - angle < 1e-7) {
    out.degenerate = true;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis[i]) > 1e-9) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
  }
  out.omega = angle * axis;
  return out;
}

inline Vec3 log_so3(const Rotation3& r) { return log_so3_checked(r).omega; }

/// Right Jacobian of SO(3): exp(w + d) ~ exp(w) exp(Jr(w) d).
inline Mat3 right_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < 1e-10) {
    return Mat3::Identity() - 0.5 * w + w * w / 6.0;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() - (1.0 - std::cos(theta)) / theta2 * w +
         (theta - std::sin(theta)) / (theta2 * theta) * w * w;
}

inline Mat3 right_jacobian_inverse(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < 1e-10) {
    return Mat3::Identity() + 0.5 * w + w * w / 12.0;
  }
  const double theta = std::sqrt(theta2);
  const double coeff = 1.0 / theta2 - (1.0 + std::cos(theta)) /
                                          (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * w + coeff * w * w;
}

inline Mat3 left_jacobian(const Vec3& omega) { return right_jacobian(-omega); }

/// Integral of (1 - s) exp(s w^) over s in [0, 1]; the position-integration
/// counterpart of the left Jacobian.
inline Mat3 double_integral_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < 1e-6) {
    return 0.5 * Mat3::Identity() + w / 6.0 + w * w / 24.0 +
           theta2 * (-w / 120.0 - w * w / 720.0);
  }
  const double theta = std::sqrt(theta2);
  return 0.5 * Mat3::Identity() +
         (theta - std::sin(theta)) / (theta2 * theta) * w +
         (theta2 + 2.0 * std::cos(theta) - 2.0) / (2.0 * theta2 * theta2) *
             w * w;
}

struct Rpy {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// ZYX Euler angles. Throws GeometryError within 1e-6 of gimbal lock.
inline Rpy rotation_to_rpy(const Rotation3& r) {
  const Mat3 m = r.matrix();
  const double s = std::clamp(-m(2, 0), -1.0, 1.0);
  const double pitch = std::asin(s);
  if (std::abs(pitch) >= std::numbers::pi / 2.0 - 1e-6) {
    throw GeometryError("rotation_to_rpy: pitch too close to +-pi/2");
  }
  return {std::atan2(m(2, 1), m(2, 2)), pitch, std::atan2(m(1, 0), m(0, 0))};
}

struct Pose3 {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();
};

/// UAV state at one epoch. Tangent layout:
/// [0:3) rotation, [3:6) position, [6:9) velocity, [9:12) accel bias,
/// [12:15) gyro bias.
struct NavState {
  static constexpr int kDim = 15;

  Pose3 pose;
  Vec3 velocity = Vec3::Zero();
  Vec3 bias_accel = Vec3::Zero();
  Vec3 bias_gyro = Vec3::Zero();

  const Rotation3& rotation() const { return pose.rotation; }
  const Vec3& position() const { return pose.translation; }

  static NavState at(const Vec3& position) {
    NavState s;
    s.pose.translation = position;
    return s;
  }
};

inline NavState navstate_retract(const NavState& x, const Vector15& delta) {
  NavState out;
  out.pose.rotation = x.pose.rotation * exp_so3(delta.segment<3>(0));
  out.pose.translation = x.pose.translation + delta.segment<3>(3);
  out.velocity = x.velocity + delta.segment<3>(6);
  out.bias_accel = x.bias_accel + delta.segment<3>(9);
  out.bias_gyro = x.bias_gyro + delta.segment<3>(12);
  return out;
}

/// Inverse of navstate_retract: retract(x, local(x, y)) == y.
inline Vector15 navstate_local(const NavState& x, const NavState& y) {
  Vector15 d;
  d.segment<3>(0) = log_so3(x.pose.rotation.inverse() * y.pose.rotation);
  d.segment<3>(3) = y.pose.translation - x.pose.translation;
  d.segment<3>(6) = y.velocity - x.velocity;
  d.segment<3>(9) = y.bias_accel - x.bias_accel;
  d.segment<3>(12) = y.bias_gyro - x.bias_gyro;
  return d;
}

}  // namespace hoverfg
