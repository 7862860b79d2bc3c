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

#include "hoverfg/factors.hpp"
#include "jacobian_suite.hpp"
#include "oracles.hpp"

namespace hoverfg {
namespace {

using testing::Rng;

NavState at_position(const Vec3& p) { return NavState::at(p); }

NavState with_velocity(const Vec3& v) {
  NavState x;
  x.velocity = v;
  return x;
}

TEST(Whiten, Examples) {
  EXPECT_EQ(whiten(Eigen::Vector3d::Zero(), DiagonalNoise::isotropic(3, 0.3)),
            Eigen::VectorXd(Eigen::Vector3d::Zero()));
  EXPECT_NEAR(whiten(Eigen::VectorXd::Constant(1, 0.2),
                     DiagonalNoise::isotropic(1, 0.1))[0],
              2.0, 1e-15);
  EXPECT_EQ(whiten(Eigen::Vector3d(1, 2, 3), DiagonalNoise::isotropic(3, 1.0)),
            Eigen::VectorXd(Eigen::Vector3d(1, 2, 3)));
}

TEST(Whiten, DimensionMismatch) {
  EXPECT_THROW(whiten(Eigen::Vector2d(1, 2), DiagonalNoise::isotropic(3, 1.0)),
               std::invalid_argument);
}

TEST(Whiten, IsLinear) {
  Rng rng(41);
  const DiagonalNoise n(Eigen::Vector3d(0.1, 0.5, 2.0));
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd r = rng.vec(3.0);
    const double a = rng.uniform(-5, 5);
    EXPECT_LT((whiten(a * r, n) - a * whiten(r, n)).norm(), 1e-14);
  }
}

TEST(DiagonalNoise, RejectsNonPositive) {
  EXPECT_THROW(DiagonalNoise(Eigen::Vector2d(0.1, 0.0)), std::invalid_argument);
  EXPECT_THROW(DiagonalNoise(Eigen::Vector2d(0.1, -1.0)), std::invalid_argument);
  EXPECT_THROW(DiagonalNoise(Eigen::Vector2d(0.1, std::nan(""))),
               std::invalid_argument);
}

TEST(PosePrior, Examples) {
  Rng rng(42);
  const NavState x = rng.navstate();
  EXPECT_EQ(pose_prior_residual(x, x.pose).residual, Vector6::Zero());

  NavState y = x;
  y.pose.translation += Vec3(0.2, 0, 0);
  const Vector6 r = pose_prior_residual(y, x.pose).residual;
  EXPECT_LT((r - (Vector6() << 0, 0, 0, 0.2, 0, 0).finished()).norm(), 1e-12);

  // z yawed +0.1 relative to x.
  const Pose3 z{x.pose.rotation * exp_so3({0, 0, 0.1}), x.pose.translation};
  const Vector6 ry = pose_prior_residual(x, z).residual;
  EXPECT_LT((ry.head<3>() - Vec3(0, 0, -0.1)).norm(), 1e-9);
  EXPECT_LT(ry.tail<3>().norm(), 1e-12);
}

TEST(Range, Examples) {
  EXPECT_NEAR(range_factor_residual(at_position({0, 0, -2}), Vec3::Zero(), 2.0)
                  .residual,
              0.0, 1e-15);
  EXPECT_NEAR(
      range_factor_residual(at_position({3, 4, 0}), Vec3::Zero(), 5.0).residual,
      0.0, 1e-15);
  EXPECT_NEAR(
      range_factor_residual(at_position({1, 1, 1}), Vec3::Zero(), 2.0).residual,
      std::sqrt(3.0) - 2.0, 1e-15);
  EXPECT_NEAR(std::sqrt(3.0) - 2.0, -0.2679, 1e-4);
}

TEST(Range, JacobianIsLineOfSight) {
  const auto res = range_factor_residual(at_position({3, 4, 0}), Vec3::Zero(), 1);
  EXPECT_LT((res.d_uav.block<1, 3>(0, 3) - Eigen::RowVector3d(0.6, 0.8, 0)).norm(),
            1e-15);
  EXPECT_LT((res.d_ugv + Eigen::RowVector3d(0.6, 0.8, 0)).norm(), 1e-15);
}

TEST(Range, CoincidentPositionsRejected) {
  EXPECT_THROW(range_factor_residual(at_position({1, 2, 3}), Vec3(1, 2, 3), 0.0),
               GeometryError);
}

TEST(Elevation, Examples) {
  EXPECT_NEAR(elevation_factor_residual(at_position({5, 3, -2}), 2.0).residual,
              0.0, 1e-15);
  EXPECT_NEAR(elevation_factor_residual(at_position({0, 0, 0}), 2.0).residual,
              2.0, 1e-15);
  EXPECT_NEAR(elevation_factor_residual(at_position({1, 1, -1.5}), 2.0).residual,
              0.5, 1e-15);
}

TEST(Hover, Examples) {
  EXPECT_EQ(hover_factor_residual(NavState{}).residual, Vec3::Zero());
  const FactorSpec f1 =
      make_hover(StateKey::uav(0, 0), DiagonalNoise::isotropic(3, 0.01));
  const Eigen::VectorXd w1 =
      linearize(f1, with_velocity({0.01, 0, 0}), nullptr).residual;
  EXPECT_LT((w1 - Eigen::Vector3d(1, 0, 0)).norm(), 1e-12);
  const FactorSpec f2 =
      make_hover(StateKey::uav(0, 0), DiagonalNoise::isotropic(3, 0.05));
  const Eigen::VectorXd w2 =
      linearize(f2, with_velocity({0.03, -0.04, 0}), nullptr).residual;
  EXPECT_LT((w2 - Eigen::Vector3d(0.6, -0.8, 0)).norm(), 1e-12);
  EXPECT_NEAR(w2.norm(), 1.0, 1e-12);
}

TEST(Hover, DependsOnlyOnVelocity) {
  Rng rng(43);
  for (int i = 0; i < 50; ++i) {
    const NavState x = rng.navstate();
    NavState y = rng.navstate();
    y.velocity = x.velocity;
    EXPECT_EQ(hover_factor_residual(x).residual, hover_factor_residual(y).residual);
  }
  const auto J = hover_factor_residual(NavState{}).d_state;
  EXPECT_EQ(Mat3(J.block<3, 3>(0, 6)), Mat3::Identity());
  EXPECT_EQ(J.leftCols(6).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(J.rightCols(6).cwiseAbs().sum(), 0.0);
}

TEST(VelocityPrior, Examples) {
  EXPECT_EQ(velocity_prior_residual(with_velocity({1, 2, 3}), {1, 2, 3}).residual,
            Vec3::Zero());
  EXPECT_EQ(velocity_prior_residual(with_velocity({1, 0, 0}), Vec3::Zero()).residual,
            Vec3(1, 0, 0));
  EXPECT_LT((velocity_prior_residual(with_velocity({0.5, 0.5, 0}), {0.4, 0.6, 0})
                 .residual -
             Vec3(0.1, -0.1, 0))
                .norm(),
            1e-15);
}

// x_j from RK4 integration of the same samples from x_i.
NavState integrate_forward(const NavState& xi, const std::vector<ImuSample>& s,
                           const ImuBias& bias, const Vec3& g) {
  const auto fine = testing::fine_step_integrate(s, bias, 1e-5);
  double T = 0.0;
  for (const ImuSample& smp : s) T += smp.dt;
  NavState xj = xi;
  xj.pose.rotation =
      xi.pose.rotation * Rotation3::from_unit_quaternion(fine.q);
  xj.velocity = xi.velocity + g * T + xi.pose.rotation * fine.v;
  xj.pose.translation = xi.pose.translation + xi.velocity * T +
                        0.5 * g * T * T + xi.pose.rotation * fine.p;
  return xj;
}

TEST(ImuFactor, ZeroForForwardIntegratedPair) {
  Rng rng(44);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<ImuSample> s;
    for (int i = 0; i < 20; ++i) {
      s.push_back({0.005, rng.vec(2.0) + Vec3(0, 0, -9.81), rng.vec(0.5)});
    }
    const ImuBias bias{rng.vec(0.05), rng.vec(0.005)};
    NavState xi = rng.navstate();
    xi.bias_accel = bias.accel;
    xi.bias_gyro = bias.gyro;
    const NavState xj = integrate_forward(xi, s, bias, ned_gravity());
    const auto res =
        imu_factor_residual(xi, xj, preintegrate(s, bias), ned_gravity());
    EXPECT_LT(res.residual.cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ImuFactor, ZeroPreintegrationIdentityStates) {
  const auto res = imu_factor_residual(NavState{}, NavState{},
                                       preintegrate(std::vector<ImuSample>{}),
                                       Vec3::Zero());
  EXPECT_EQ(res.residual, Vector15::Zero());
}

TEST(ImuFactor, PositionPerturbationIsAdditiveWithIdentityRotation) {
  Rng rng(45);
  std::vector<ImuSample> s(20, ImuSample{0.005, {0.3, -0.2, -9.5}, {0.1, 0.2, -0.1}});
  NavState xi;
  xi.velocity = Vec3(0.5, 0.1, 0);
  const PreintegratedImu pre = preintegrate(s);
  NavState xj = predict(xi, pre, ned_gravity());
  xj.pose.translation += Vec3(0.1, 0, 0);
  const auto res = imu_factor_residual(xi, xj, pre, ned_gravity());
  EXPECT_LT((res.residual.segment<3>(6) - Vec3(0.1, 0, 0)).norm(), 1e-12);
  EXPECT_LT(res.residual.head<6>().norm(), 1e-12);
}

TEST(Jacobians, AllKindsMatchFiniteDifferences) {
  const auto worst = testing::jacobian_suite(100, 46);
  for (const auto& [kind, err] : worst) {
    EXPECT_LT(err, 1e-5) << to_string(kind);
  }
}

TEST(FactorSpec, Validation) {
  const auto n1 = DiagonalNoise::isotropic(1, 0.1);
  const auto n3 = DiagonalNoise::isotropic(3, 0.1);
  const StateKey u0 = StateKey::uav(0, 0), u1 = StateKey::uav(1, 0.1),
                 u2 = StateKey::uav(2, 0.2), g0 = StateKey::ugv(0, 0);
  EXPECT_NO_THROW(validate(make_range(u0, g0, 2.0, n1)));
  EXPECT_THROW(validate(make_range(u0, u1, 2.0, n1)), std::invalid_argument);
  EXPECT_THROW(validate(make_range(u0, g0, -1.0, n1)), std::invalid_argument);
  EXPECT_THROW(validate(make_hover(u0, n1)), std::invalid_argument);
  EXPECT_THROW(validate(make_hover(g0, n3)), std::invalid_argument);
  EXPECT_THROW(validate(make_ugv_prior(u0, Vec3::Zero(), n3)),
               std::invalid_argument);
  const auto n15 = DiagonalNoise::isotropic(15, 0.1);
  PreintegratedImu pre = preintegrate(std::vector<ImuSample>{{0.1, {}, {}}});
  EXPECT_NO_THROW(validate(make_imu(u0, u1, pre, n15)));
  EXPECT_THROW(validate(make_imu(u0, u2, pre, n15)), std::invalid_argument);
  EXPECT_THROW(validate(make_imu(u0, g0, pre, n15)), std::invalid_argument);
}

TEST(FactorSpec, ResidualDimensions) {
  EXPECT_EQ(residual_dim(FactorKind::PosePrior), 6);
  EXPECT_EQ(residual_dim(FactorKind::Elevation), 1);
  EXPECT_EQ(residual_dim(FactorKind::Range), 1);
  EXPECT_EQ(residual_dim(FactorKind::Hover), 3);
  EXPECT_EQ(residual_dim(FactorKind::VelocityPrior), 3);
  EXPECT_EQ(residual_dim(FactorKind::ImuPreint), 15);
  EXPECT_EQ(residual_dim(FactorKind::UgvPosePrior), 3);
}

}  // namespace
}  // namespace hoverfg
