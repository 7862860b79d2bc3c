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

#include <gtest/gtest.h>

#include <numbers>

#include "hoverfg/geometry.hpp"
#include "oracles.hpp"

namespace hoverfg {
namespace {

using testing::Rng;
constexpr double kPi = std::numbers::pi;

// Matrix exponential of skew(w) by its power series, summed until the terms
// vanish.
Mat3 series_exp(const Vec3& w) {
  const Mat3 W = skew(w);
  Mat3 term = Mat3::Identity();
  Mat3 sum = Mat3::Identity();
  for (int k = 1; k < 40; ++k) {
    term = term * W / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).matrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).matrix(); }
Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).matrix(); }

TEST(ExpSo3, ZeroIsIdentity) {
  const Rotation3 r = exp_so3(Vec3::Zero());
  EXPECT_EQ(r.w(), 1.0);
  EXPECT_EQ(r.x(), 0.0);
  EXPECT_EQ(r.y(), 0.0);
  EXPECT_EQ(r.z(), 0.0);
}

TEST(ExpSo3, QuarterTurnYaw) {
  const Vec3 v = exp_so3({0, 0, kPi / 2}).rotate(Vec3::UnitX());
  EXPECT_NEAR(v.x(), 0.0, 1e-12);
  EXPECT_NEAR(v.y(), 1.0, 1e-12);
  EXPECT_NEAR(v.z(), 0.0, 1e-12);
}

TEST(ExpSo3, MatchesSeriesExpansion) {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = rng.vec(1.0).normalized() * 0.3;
    EXPECT_LT((exp_so3(w).matrix() - series_exp(w)).cwiseAbs().maxCoeff(),
              1e-10);
  }
  // Small-angle branch.
  const Vec3 tiny(3e-5, -2e-5, 1e-5);
  EXPECT_LT((exp_so3(tiny).matrix() - series_exp(tiny)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(ExpSo3, StaysUnitNorm) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const Rotation3 r = exp_so3(rng.vec(10.0));
    EXPECT_NEAR(r.quaternion().norm(), 1.0, 1e-9);
    EXPECT_GE(r.w(), 0.0);
  }
}

TEST(LogSo3, Identity) {
  EXPECT_EQ(log_so3(Rotation3::identity()), Vec3::Zero());
}

TEST(LogSo3, InversePair) {
  EXPECT_LT((log_so3(exp_so3({0.1, 0.2, 0.3})) - Vec3(0.1, 0.2, 0.3)).norm(),
            1e-9);
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    Vec3 w = rng.vec(1.0);
    if (w.norm() < 1e-6) continue;
    w = w.normalized() * rng.uniform(0.0, kPi - 1e-3);
    EXPECT_LT((log_so3(exp_so3(w)) - w).norm(), 1e-9) << w.transpose();
  }
}

TEST(LogSo3, ContinuousAtIdentity) {
  for (double a : {1e-3, 1e-6, 1e-9, 1e-12}) {
    const Vec3 w(a, -2 * a, 0.5 * a);
    EXPECT_LT((log_so3(exp_so3(w)) - w).norm(), 1e-15 + 1e-9 * a);
  }
}

TEST(LogSo3, HalfTurnCanonicalized) {
  const Rotation3 plus = Rotation3::from_matrix(rot_z(kPi));
  const Rotation3 minus = Rotation3::from_matrix(rot_z(-kPi));
  for (const Rotation3& r : {plus, minus}) {
    const LogResult res = log_so3_checked(r);
    EXPECT_TRUE(res.degenerate);
    EXPECT_NEAR(res.omega.x(), 0.0, 1e-12);
    EXPECT_NEAR(res.omega.y(), 0.0, 1e-12);
    EXPECT_NEAR(res.omega.z(), kPi, 1e-12);
  }
  EXPECT_FALSE(log_so3_checked(exp_so3({0, 0, kPi - 1e-3})).degenerate);
}

TEST(Rotation3, CompositionIsAssociative) {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    const Rotation3 a = rng.rotation(), b = rng.rotation(), c = rng.rotation();
    EXPECT_TRUE(((a * b) * c).is_approx(a * (b * c), 1e-12));
  }
}

TEST(Rotation3, MatrixRoundTrip) {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Rotation3 r = rng.rotation();
    EXPECT_TRUE(Rotation3::from_matrix(r.matrix()).is_approx(r, 1e-12));
    EXPECT_LT((r.unrotate(r.rotate(Vec3(1, 2, 3))) - Vec3(1, 2, 3)).norm(),
              1e-12);
  }
}

TEST(Jacobians, RightJacobianFirstOrder) {
  Rng rng(16);
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = rng.vec(1.5);
    const Vec3 d = rng.vec(1.0) * 1e-6;
    const Rotation3 lhs = exp_so3(w + d);
    const Rotation3 rhs = exp_so3(w) * exp_so3(right_jacobian(w) * d);
    EXPECT_LT(log_so3(rhs.inverse() * lhs).norm(), 1e-11);
    EXPECT_LT((right_jacobian_inverse(w) * right_jacobian(w) -
               Mat3::Identity())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Jacobians, DoubleIntegralMatchesQuadrature) {
  Rng rng(17);
  for (double scale : {1e-4, 0.3, 2.0}) {
    const Vec3 w = rng.vec(1.0).normalized() * scale;
    // Composite Simpson rule on (1 - s) exp(s w^).
    const int n = 2000;
    Mat3 acc = Mat3::Zero();
    for (int k = 0; k <= n; ++k) {
      const double s = static_cast<double>(k) / n;
      const double c = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += c * (1.0 - s) * series_exp(s * w);
    }
    acc /= 3.0 * n;
    EXPECT_LT((double_integral_jacobian(w) - acc).cwiseAbs().maxCoeff(), 1e-10)
        << scale;
  }
}

TEST(NavStateRetract, ZeroDeltaIsExact) {
  Rng rng(18);
  const NavState x = rng.navstate();
  const NavState y = navstate_retract(x, Vector15::Zero());
  EXPECT_EQ(y.pose.rotation.quaternion().coeffs(),
            x.pose.rotation.quaternion().coeffs());
  EXPECT_EQ(y.pose.translation, x.pose.translation);
  EXPECT_EQ(y.velocity, x.velocity);
  EXPECT_EQ(y.bias_accel, x.bias_accel);
  EXPECT_EQ(y.bias_gyro, x.bias_gyro);
}

TEST(NavStateRetract, PositionDelta) {
  Vector15 d = Vector15::Zero();
  d.segment<3>(3) = Vec3(1, 2, 3);
  const NavState y = navstate_retract(NavState{}, d);
  EXPECT_EQ(y.pose.translation, Vec3(1, 2, 3));
  EXPECT_TRUE(y.pose.rotation.is_approx(Rotation3::identity()));
}

TEST(NavStateRetract, RoundTrip) {
  Rng rng(19);
  for (int i = 0; i < 500; ++i) {
    const NavState x = rng.navstate();
    Vector15 d;
    for (int k = 0; k < 15; ++k) d[k] = rng.normal();
    d *= rng.uniform(0.0, 0.5) / d.norm();
    EXPECT_LT((navstate_local(x, navstate_retract(x, d)) - d).norm(), 1e-9);
  }
}

TEST(RotationToRpy, Identity) {
  const Rpy e = rotation_to_rpy(Rotation3::identity());
  EXPECT_EQ(e.roll, 0.0);
  EXPECT_EQ(e.pitch, 0.0);
  EXPECT_EQ(e.yaw, 0.0);
}

TEST(RotationToRpy, PureYaw) {
  const Rpy e = rotation_to_rpy(exp_so3({0, 0, 0.5}));
  EXPECT_NEAR(e.roll, 0.0, 1e-12);
  EXPECT_NEAR(e.pitch, 0.0, 1e-12);
  EXPECT_NEAR(e.yaw, 0.5, 1e-12);
}

TEST(RotationToRpy, ComposeAndExtract) {
  // ZYX: R = Rz(yaw) Ry(pitch) Rx(roll).
  const Rotation3 r =
      Rotation3::from_matrix(rot_z(0.3) * rot_y(0.2) * rot_x(0.1));
  const Rpy e = rotation_to_rpy(r);
  EXPECT_NEAR(e.roll, 0.1, 1e-9);
  EXPECT_NEAR(e.pitch, 0.2, 1e-9);
  EXPECT_NEAR(e.yaw, 0.3, 1e-9);
}

TEST(RotationToRpy, ReconstructsRandomRotations) {
  Rng rng(20);
  for (int i = 0; i < 300; ++i) {
    const Rotation3 r = rng.rotation();
    Rpy e;
    try {
      e = rotation_to_rpy(r);
    } catch (const GeometryError&) {
      continue;
    }
    const Mat3 m = rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
    EXPECT_LT((m - r.matrix()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE(Rotation3::from_rpy(e.roll, e.pitch, e.yaw).is_approx(r, 1e-9));
  }
}

TEST(RotationToRpy, GimbalLockRejected) {
  EXPECT_THROW(rotation_to_rpy(Rotation3::from_matrix(rot_y(kPi / 2))),
               GeometryError);
  EXPECT_THROW(rotation_to_rpy(Rotation3::from_matrix(rot_y(-kPi / 2 + 1e-8))),
               GeometryError);
  EXPECT_NO_THROW(rotation_to_rpy(Rotation3::from_matrix(rot_y(kPi / 2 - 1e-3))));
}

TEST(WrapAngle, Range) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(0.25), 0.25, 0.0);
}

}  // namespace
}  // namespace hoverfg
