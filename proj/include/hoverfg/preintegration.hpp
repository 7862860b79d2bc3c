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

// On-manifold IMU preintegration between two keyframes.
//
// Each sample holds body-frame specific force and angular rate that are
// treated as constant over its interval; increments are integrated in closed
// form for that piecewise-constant model, so constant-rate segments are
// reproduced exactly regardless of the sample rate. Bias sensitivities and
// the increment covariance are first-order.

#pragma once

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <vector>

#include "hoverfg/geometry.hpp"

namespace hoverfg {

struct ImuSample {
  double dt = 0.0;             // s
  Vec3 accel = Vec3::Zero();   // m/s^2, body
  Vec3 gyro = Vec3::Zero();    // rad/s, body
};

/// Continuous-time white-noise densities used to propagate covariance.
struct ImuNoiseDensity {
  double accel = 0.02;   // m/s^2/sqrt(Hz)
  double gyro = 0.002;   // rad/s/sqrt(Hz)
};

struct ImuBias {
  Vec3 accel = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
};

/// Error-state ordering of `covariance` and rows of `bias_jacobian`:
/// [rotation, velocity, position]. Columns of `bias_jacobian`: [accel, gyro].
struct PreintegratedImu {
  using Matrix9 = Eigen::Matrix<double, 9, 9>;
  using Matrix96 = Eigen::Matrix<double, 9, 6>;

  Rotation3 delta_R;
  Vec3 delta_v = Vec3::Zero();
  Vec3 delta_p = Vec3::Zero();
  double dt_total = 0.0;
  Matrix9 covariance = Matrix9::Zero();
  Matrix96 bias_jacobian = Matrix96::Zero();
  ImuBias bias_ref;
  int sample_count = 0;

  Mat3 dR_dbg() const { return bias_jacobian.block<3, 3>(0, 3); }
  Mat3 dv_dba() const { return bias_jacobian.block<3, 3>(3, 0); }
  Mat3 dv_dbg() const { return bias_jacobian.block<3, 3>(3, 3); }
  Mat3 dp_dba() const { return bias_jacobian.block<3, 3>(6, 0); }
  Mat3 dp_dbg() const { return bias_jacobian.block<3, 3>(6, 3); }
};

namespace detail {

/// Linear maps of the composed error state with respect to the error states
/// of the first (a) and second (b) segment.
inline void composition_maps(const PreintegratedImu& a,
                             const PreintegratedImu& b,
                             PreintegratedImu::Matrix9& A,
                             PreintegratedImu::Matrix9& B) {
  const Mat3 Ra = a.delta_R.matrix();
  A.setZero();
  A.block<3, 3>(0, 0) = b.delta_R.matrix().transpose();
  A.block<3, 3>(3, 0) = -Ra * skew(b.delta_v);
  A.block<3, 3>(3, 3).setIdentity();
  A.block<3, 3>(6, 0) = -Ra * skew(b.delta_p);
  A.block<3, 3>(6, 3) = b.dt_total * Mat3::Identity();
  A.block<3, 3>(6, 6).setIdentity();
  B.setZero();
  B.block<3, 3>(0, 0).setIdentity();
  B.block<3, 3>(3, 3) = Ra;
  B.block<3, 3>(6, 6) = Ra;
}

inline PreintegratedImu single_step(const ImuSample& s, const ImuBias& bias,
                                    const ImuNoiseDensity& noise) {
  const double dt = s.dt;
  const Vec3 a = s.accel - bias.accel;
  const Vec3 phi = (s.gyro - bias.gyro) * dt;
  const Mat3 g1 = left_jacobian(phi);
  const Mat3 g2 = double_integral_jacobian(phi);
  const Mat3 jr = right_jacobian(phi);

  PreintegratedImu step;
  step.delta_R = exp_so3(phi);
  step.delta_v = g1 * a * dt;
  step.delta_p = g2 * a * dt * dt;
  step.dt_total = dt;
  step.sample_count = 1;
  step.bias_ref = bias;

  step.bias_jacobian.block<3, 3>(0, 3) = -jr * dt;
  step.bias_jacobian.block<3, 3>(3, 0) = -g1 * dt;
  step.bias_jacobian.block<3, 3>(3, 3) = 0.5 * skew(a) * dt * dt;
  step.bias_jacobian.block<3, 3>(6, 0) = -g2 * dt * dt;
  step.bias_jacobian.block<3, 3>(6, 3) = skew(a) * dt * dt * dt / 6.0;

  // Sample noise enters exactly like a bias offset, with variance density^2/dt.
  Eigen::Matrix<double, 6, 1> q;
  q << Vec3::Constant(noise.accel * noise.accel / dt),
      Vec3::Constant(noise.gyro * noise.gyro / dt);
  step.covariance =
      step.bias_jacobian * q.asDiagonal() * step.bias_jacobian.transpose();
  return step;
}

}  // namespace detail

/// Concatenates two consecutive preintegrated segments. Both must share the
/// same bias linearization point.
inline PreintegratedImu compose(const PreintegratedImu& a,
                                const PreintegratedImu& b) {
  PreintegratedImu::Matrix9 A, B;
  detail::composition_maps(a, b, A, B);
  PreintegratedImu out;
  out.delta_R = a.delta_R * b.delta_R;
  out.delta_v = a.delta_v + a.delta_R * b.delta_v;
  out.delta_p = a.delta_p + a.delta_v * b.dt_total + a.delta_R * b.delta_p;
  out.dt_total = a.dt_total + b.dt_total;
  out.sample_count = a.sample_count + b.sample_count;
  out.bias_ref = a.bias_ref;
  out.bias_jacobian = A * a.bias_jacobian + B * b.bias_jacobian;
  out.covariance = A * a.covariance * A.transpose() +
                   B * b.covariance * B.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

/// Appends one raw sample to an existing preintegration.
inline void integrate(PreintegratedImu& pre, const ImuSample& sample,
                      const ImuNoiseDensity& noise = {}) {
  if (!(sample.dt > 0.0)) {
    throw std::invalid_argument("preintegrate: sample dt must be positive");
  }
  pre = compose(pre, detail::single_step(sample, pre.bias_ref, noise));
}

inline PreintegratedImu preintegrate(std::span<const ImuSample> samples,
                                     const ImuBias& bias_ref = {},
                                     const ImuNoiseDensity& noise = {}) {
  PreintegratedImu pre;
  pre.bias_ref = bias_ref;
  for (const ImuSample& s : samples) integrate(pre, s, noise);
  return pre;
}

inline PreintegratedImu preintegrate(const std::vector<ImuSample>& samples,
                                     const ImuBias& bias_ref = {},
                                     const ImuNoiseDensity& noise = {}) {
  return preintegrate(std::span<const ImuSample>(samples), bias_ref, noise);
}

struct CorrectedDeltas {
  Rotation3 delta_R;
  Vec3 delta_v;
  Vec3 delta_p;
};

/// First-order bias correction about `pre.bias_ref`.
inline CorrectedDeltas correct_for_bias(const PreintegratedImu& pre,
                                        const ImuBias& bias) {
  const Vec3 dba = bias.accel - pre.bias_ref.accel;
  const Vec3 dbg = bias.gyro - pre.bias_ref.gyro;
  return {pre.delta_R * exp_so3(pre.dR_dbg() * dbg),
          pre.delta_v + pre.dv_dba() * dba + pre.dv_dbg() * dbg,
          pre.delta_p + pre.dp_dba() * dba + pre.dp_dbg() * dbg};
}

/// Propagates a navigation state through a preintegrated segment.
inline NavState predict(const NavState& x, const PreintegratedImu& pre,
                        const Vec3& gravity) {
  const CorrectedDeltas d =
      correct_for_bias(pre, {x.bias_accel, x.bias_gyro});
  const double dt = pre.dt_total;
  NavState out = x;
  out.pose.rotation = x.pose.rotation * d.delta_R;
  out.velocity = x.velocity + gravity * dt + x.pose.rotation * d.delta_v;
  out.pose.translation = x.pose.translation + x.velocity * dt +
                         0.5 * gravity * dt * dt +
                         x.pose.rotation * d.delta_p;
  return out;
}

}  // namespace hoverfg
