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

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls the closed-form code paths it is used to check.

#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hoverfg/factors.hpp"
#include "hoverfg/geometry.hpp"
#include "hoverfg/graph.hpp"
#include "hoverfg/preintegration.hpp"

namespace hoverfg::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  double normal(double sigma = 1.0) {
    return std::normal_distribution<double>(0.0, sigma)(gen_);
  }
  Vec3 vec(double scale) {
    return {uniform(-scale, scale), uniform(-scale, scale),
            uniform(-scale, scale)};
  }
  Rotation3 rotation(double max_angle = 3.0) {
    Vec3 axis = vec(1.0);
    while (axis.norm() < 1e-3) axis = vec(1.0);
    return exp_so3(axis.normalized() * uniform(0.0, max_angle));
  }
  NavState navstate(double rot = 3.0, double pos = 5.0, double vel = 2.0,
                    double bias = 0.1) {
    NavState x;
    x.pose.rotation = rotation(rot);
    x.pose.translation = vec(pos);
    x.velocity = vec(vel);
    x.bias_accel = vec(bias);
    x.bias_gyro = vec(bias * 0.1);
    return x;
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// Central-difference Jacobian of f with respect to the 15-dim tangent of x.
inline Eigen::MatrixXd numerical_jacobian(
    const std::function<Eigen::VectorXd(const NavState&)>& f,
    const NavState& x, double step = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), 15);
  for (int k = 0; k < 15; ++k) {
    Vector15 d = Vector15::Zero();
    d[k] = step;
    J.col(k) = (f(navstate_retract(x, d)) - f(navstate_retract(x, -d))) /
               (2.0 * step);
  }
  return J;
}

/// Same for a plain 3-vector argument.
inline Eigen::MatrixXd numerical_jacobian(
    const std::function<Eigen::VectorXd(const Vec3&)>& f, const Vec3& p,
    double step = 1e-6) {
  const Eigen::VectorXd f0 = f(p);
  Eigen::MatrixXd J(f0.size(), 3);
  for (int k = 0; k < 3; ++k) {
    Vec3 d = Vec3::Zero();
    d[k] = step;
    J.col(k) = (f(p + d) - f(p - d)) / (2.0 * step);
  }
  return J;
}

/// Relative Jacobian error: max |A - N| / max(1, max |N|).
inline double relative_error(const Eigen::MatrixXd& analytic,
                             const Eigen::MatrixXd& numeric) {
  const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

inline std::vector<ImuSample> constant_samples(const Vec3& accel,
                                               const Vec3& gyro,
                                               double duration, double rate) {
  const int n = static_cast<int>(std::lround(duration * rate));
  return std::vector<ImuSample>(static_cast<std::size_t>(n),
                                ImuSample{1.0 / rate, accel, gyro});
}

inline double rotation_distance(const Rotation3& a, const Eigen::Quaterniond& b) {
  return log_so3(a.inverse() * Rotation3::from_unit_quaternion(b)).norm();
}

/// Relative motion obtained by RK4 integration of quaternion kinematics and
/// translational dynamics with step `h` (samples are piecewise constant).
struct FineDeltas {
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();
};

inline FineDeltas fine_step_integrate(const std::vector<ImuSample>& samples,
                                      const ImuBias& bias = {},
                                      double h = 1e-5) {
  FineDeltas s;
  const auto qdot = [](const Eigen::Vector4d& q, const Vec3& w) {
    // q = (w, x, y, z); dq/dt = 0.5 q (x) (0, w)
    Eigen::Vector4d d;
    d[0] = -0.5 * (q[1] * w.x() + q[2] * w.y() + q[3] * w.z());
    d[1] = 0.5 * (q[0] * w.x() + q[2] * w.z() - q[3] * w.y());
    d[2] = 0.5 * (q[0] * w.y() + q[3] * w.x() - q[1] * w.z());
    d[3] = 0.5 * (q[0] * w.z() + q[1] * w.y() - q[2] * w.x());
    return d;
  };
  const auto rot = [](const Eigen::Vector4d& q) {
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
  };
  Eigen::Vector4d q(1, 0, 0, 0);
  for (const ImuSample& smp : samples) {
    const Vec3 w = smp.gyro - bias.gyro;
    const Vec3 a = smp.accel - bias.accel;
    const long n = std::max(1L, std::lround(smp.dt / h));
    const double dt = smp.dt / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
      // Classical RK4 on y = (q, v, p) with q' = 0.5 q (0, w),
      // v' = R(q) a, p' = v.
      const auto vdot = [&](const Eigen::Vector4d& qq) { return Vec3(rot(qq) * a); };
      const Eigen::Vector4d kq1 = qdot(q, w);
      const Vec3 kv1 = vdot(q), kp1 = s.v;
      const Eigen::Vector4d q2 = q + 0.5 * dt * kq1;
      const Eigen::Vector4d kq2 = qdot(q2, w);
      const Vec3 kv2 = vdot(q2), kp2 = s.v + 0.5 * dt * kv1;
      const Eigen::Vector4d q3 = q + 0.5 * dt * kq2;
      const Eigen::Vector4d kq3 = qdot(q3, w);
      const Vec3 kv3 = vdot(q3), kp3 = s.v + 0.5 * dt * kv2;
      const Eigen::Vector4d q4 = q + dt * kq3;
      const Eigen::Vector4d kq4 = qdot(q4, w);
      const Vec3 kv4 = vdot(q4), kp4 = s.v + dt * kv3;
      q += dt / 6.0 * (kq1 + 2.0 * kq2 + 2.0 * kq3 + kq4);
      q /= q.norm();
      s.v += dt / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
      s.p += dt / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    }
  }
  s.q = rot(q);
  return s;
}

/// Dense damped Gauss-Newton on the stacked whitened residual, with
/// finite-difference Jacobians of the whole residual vector and a
/// backtracking line search. Returns the final cost.
inline double dense_reference_minimize(FactorGraph& g, int max_iters = 200) {
  const int n = g.tangent_size();
  const auto residuals = [&](const std::vector<NavState>& vals) {
    std::vector<double> r;
    for (std::size_t i = 0; i < g.num_factors(); ++i) {
      const auto& s = g.factor_slots()[i];
      const NavState* b =
          s[1] >= 0 ? &vals[static_cast<std::size_t>(s[1])] : nullptr;
      const Eigen::VectorXd ri =
          linearize(g.factors()[i], vals[static_cast<std::size_t>(s[0])], b,
                    false)
              .residual;
      r.insert(r.end(), ri.data(), ri.data() + ri.size());
    }
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(r.data(),
                                                       static_cast<Eigen::Index>(r.size())));
  };
  const auto perturb = [&](const std::vector<NavState>& vals,
                           const Eigen::VectorXd& d) {
    std::vector<NavState> out = vals;
    for (std::size_t v = 0; v < vals.size(); ++v) {
      const int off = g.offsets()[v];
      if (g.keys()[v].chain == Chain::Uav) {
        out[v] = navstate_retract(vals[v], d.segment<15>(off));
      } else {
        out[v].pose.translation += d.segment<3>(off);
      }
    }
    return out;
  };
  std::vector<NavState> vals = g.values();
  Eigen::VectorXd r = residuals(vals);
  double cost = 0.5 * r.squaredNorm();
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd J(r.size(), n);
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
      d[k] = 1e-6;
      J.col(k) = (residuals(perturb(vals, d)) - residuals(perturb(vals, -d))) /
                 2e-6;
    }
    const Eigen::MatrixXd H =
        J.transpose() * J + 1e-12 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd step = H.ldlt().solve(-J.transpose() * r);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const std::vector<NavState> cand = perturb(vals, alpha * step);
      const Eigen::VectorXd rc = residuals(cand);
      const double c = 0.5 * rc.squaredNorm();
      if (c < cost) {
        vals = cand;
        r = rc;
        improved = cost - c > 1e-15 * std::max(1.0, cost);
        cost = c;
        break;
      }
    }
    if (!improved) break;
  }
  g.mutable_values() = vals;
  return cost;
}

/// State-wise RMS of the tangent difference between two value sets.
inline double state_rms(const std::vector<NavState>& a,
                        const std::vector<NavState>& b) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vector15 d = navstate_local(a[i], b[i]);
    sum += d.squaredNorm();
    count += 15;
  }
  return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

}  // namespace hoverfg::testing
