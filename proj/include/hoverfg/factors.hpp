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

// Residuals, analytic Jacobians and diagonal noise whitening for every
// factor kind used by the cooperative UAV/UGV estimator.
//
// Jacobians are taken with respect to the NavState tangent (see
// geometry.hpp); UGV nodes carry only a position, so their Jacobians are 3
// columns wide.

#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hoverfg/geometry.hpp"
#include "hoverfg/preintegration.hpp"

namespace hoverfg {

using Matrix15 = Eigen::Matrix<double, 15, 15>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Per-component standard deviations of a residual.
class DiagonalNoise {
 public:
  DiagonalNoise() = default;

  explicit DiagonalNoise(Eigen::VectorXd sigmas) : sigmas_(std::move(sigmas)) {
    for (Eigen::Index i = 0; i < sigmas_.size(); ++i) {
      if (!(sigmas_[i] > 0.0) || !std::isfinite(sigmas_[i])) {
        throw std::invalid_argument(
            "DiagonalNoise: sigma must be positive and finite");
      }
    }
  }

  static DiagonalNoise isotropic(int dim, double sigma) {
    return DiagonalNoise(Eigen::VectorXd::Constant(dim, sigma));
  }

  int dim() const { return static_cast<int>(sigmas_.size()); }
  const Eigen::VectorXd& sigmas() const { return sigmas_; }

 private:
  Eigen::VectorXd sigmas_;
};

inline Eigen::VectorXd whiten(const Eigen::VectorXd& residual,
                              const DiagonalNoise& noise) {
  if (residual.size() != noise.dim()) {
    throw std::invalid_argument("whiten: residual has dimension " +
                                std::to_string(residual.size()) +
                                ", noise has " + std::to_string(noise.dim()));
  }
  return residual.cwiseQuotient(noise.sigmas());
}

// ---------------------------------------------------------------------------
// Residual functions
// ---------------------------------------------------------------------------

struct PosePriorResidual {
  Vector6 residual;                       // [rotation, translation]
  Eigen::Matrix<double, 6, 15> d_state;
};

/// Rotation part log(z.R^T x.R), translation part x.p - z.p.
inline PosePriorResidual pose_prior_residual(const NavState& x,
                                             const Pose3& z) {
  PosePriorResidual out;
  const Vec3 r_rot = log_so3(z.rotation.inverse() * x.pose.rotation);
  out.residual << r_rot, x.pose.translation - z.translation;
  out.d_state.setZero();
  out.d_state.block<3, 3>(0, 0) = right_jacobian_inverse(r_rot);
  out.d_state.block<3, 3>(3, 3).setIdentity();
  return out;
}

struct RangeResidual {
  double residual = 0.0;
  Eigen::Matrix<double, 1, 15> d_uav;
  Eigen::RowVector3d d_ugv;
};

/// ||p_uav - p_ugv|| - z. Throws GeometryError when the two positions
/// coincide (line of sight undefined).
inline RangeResidual range_factor_residual(const NavState& x_uav,
                                           const Vec3& p_ugv, double z) {
  const Vec3 diff = x_uav.pose.translation - p_ugv;
  const double dist = diff.norm();
  if (dist < 1e-6) {
    throw GeometryError("range factor: UAV and UGV positions coincide");
  }
  RangeResidual out;
  out.residual = dist - z;
  const Eigen::RowVector3d los = (diff / dist).transpose();
  out.d_uav.setZero();
  out.d_uav.block<1, 3>(0, 3) = los;
  out.d_ugv = -los;
  return out;
}

struct ScalarResidual {
  double residual = 0.0;
  Eigen::Matrix<double, 1, 15> d_state;
};

/// Altimeter: z_alt - h(x) with h(x) = -p_down.
inline ScalarResidual elevation_factor_residual(const NavState& x,
                                                double z_alt) {
  ScalarResidual out;
  out.residual = z_alt + x.pose.translation.z();
  out.d_state.setZero();
  out.d_state(0, 5) = 1.0;
  return out;
}

struct VelocityResidual {
  Vec3 residual;
  Eigen::Matrix<double, 3, 15> d_state;
};

/// Zero-velocity pseudo-measurement for hover epochs.
inline VelocityResidual hover_factor_residual(const NavState& x) {
  VelocityResidual out;
  out.residual = x.velocity;
  out.d_state.setZero();
  out.d_state.block<3, 3>(0, 6).setIdentity();
  return out;
}

inline VelocityResidual velocity_prior_residual(const NavState& x,
                                                const Vec3& z_v) {
  VelocityResidual out = hover_factor_residual(x);
  out.residual -= z_v;
  return out;
}

struct ImuResidual {
  Vector15 residual;  // [rotation, velocity, position, accel bias, gyro bias]
  Matrix15 d_i;
  Matrix15 d_j;
};

inline ImuResidual imu_factor_residual(const NavState& x_i,
                                       const NavState& x_j,
                                       const PreintegratedImu& pre,
                                       const Vec3& gravity) {
  const double dt = pre.dt_total;
  const Vec3 dbg = x_i.bias_gyro - pre.bias_ref.gyro;
  const CorrectedDeltas d =
      correct_for_bias(pre, {x_i.bias_accel, x_i.bias_gyro});

  const Rotation3& Ri = x_i.pose.rotation;
  const Mat3 RiT = Ri.matrix().transpose();
  const Vec3 v_world = x_j.velocity - x_i.velocity - gravity * dt;
  const Vec3 p_world = x_j.pose.translation - x_i.pose.translation -
                       x_i.velocity * dt - 0.5 * gravity * dt * dt;
  const Vec3 v_body = RiT * v_world;
  const Vec3 p_body = RiT * p_world;

  const Rotation3 rot_err =
      d.delta_R.inverse() * (Ri.inverse() * x_j.pose.rotation);
  const Vec3 r_rot = log_so3(rot_err);

  ImuResidual out;
  out.residual.segment<3>(0) = r_rot;
  out.residual.segment<3>(3) = v_body - d.delta_v;
  out.residual.segment<3>(6) = p_body - d.delta_p;
  out.residual.segment<3>(9) = x_j.bias_accel - x_i.bias_accel;
  out.residual.segment<3>(12) = x_j.bias_gyro - x_i.bias_gyro;

  const Mat3 jr_inv = right_jacobian_inverse(r_rot);
  const Mat3 Rj_T_Ri =
      x_j.pose.rotation.matrix().transpose() * Ri.matrix();

  out.d_i.setZero();
  out.d_j.setZero();

  // rotation block
  out.d_i.block<3, 3>(0, 0) = -jr_inv * Rj_T_Ri;
  out.d_j.block<3, 3>(0, 0) = jr_inv;
  out.d_i.block<3, 3>(0, 12) = -jr_inv * rot_err.matrix().transpose() *
                               right_jacobian(pre.dR_dbg() * dbg) *
                               pre.dR_dbg();

  // velocity block
  out.d_i.block<3, 3>(3, 0) = skew(v_body);
  out.d_i.block<3, 3>(3, 6) = -RiT;
  out.d_j.block<3, 3>(3, 6) = RiT;
  out.d_i.block<3, 3>(3, 9) = -pre.dv_dba();
  out.d_i.block<3, 3>(3, 12) = -pre.dv_dbg();

  // position block
  out.d_i.block<3, 3>(6, 0) = skew(p_body);
  out.d_i.block<3, 3>(6, 3) = -RiT;
  out.d_j.block<3, 3>(6, 3) = RiT;
  out.d_i.block<3, 3>(6, 6) = -RiT * dt;
  out.d_i.block<3, 3>(6, 9) = -pre.dp_dba();
  out.d_i.block<3, 3>(6, 12) = -pre.dp_dbg();

  // bias random walk
  out.d_i.block<3, 3>(9, 9) = -Mat3::Identity();
  out.d_j.block<3, 3>(9, 9).setIdentity();
  out.d_i.block<3, 3>(12, 12) = -Mat3::Identity();
  out.d_j.block<3, 3>(12, 12).setIdentity();
  return out;
}

// ---------------------------------------------------------------------------
// Factor specifications
// ---------------------------------------------------------------------------

enum class Chain { Uav, Ugv };

/// Identifies a state node. Identity is (chain, index); the timestamp rides
/// along for ordering checks and hover-interval lookup.
struct StateKey {
  Chain chain = Chain::Uav;
  long index = 0;
  double timestamp = 0.0;

  static StateKey uav(long index, double t = 0.0) {
    return {Chain::Uav, index, t};
  }
  static StateKey ugv(long index, double t = 0.0) {
    return {Chain::Ugv, index, t};
  }

  bool same_node(const StateKey& o) const {
    return chain == o.chain && index == o.index;
  }
};

inline int tangent_dim(Chain c) { return c == Chain::Uav ? 15 : 3; }

inline std::string to_string(const StateKey& k) {
  return std::string(k.chain == Chain::Uav ? "uav" : "ugv") + "(" +
         std::to_string(k.index) + ")";
}

enum class FactorKind {
  PosePrior,
  Elevation,
  Range,
  Hover,
  VelocityPrior,
  ImuPreint,
  UgvPosePrior,
};

inline std::string_view to_string(FactorKind k) {
  switch (k) {
    case FactorKind::PosePrior: return "PosePrior";
    case FactorKind::Elevation: return "Elevation";
    case FactorKind::Range: return "Range";
    case FactorKind::Hover: return "Hover";
    case FactorKind::VelocityPrior: return "VelocityPrior";
    case FactorKind::ImuPreint: return "ImuPreint";
    case FactorKind::UgvPosePrior: return "UgvPosePrior";
  }
  return "?";
}

inline int residual_dim(FactorKind k) {
  switch (k) {
    case FactorKind::PosePrior: return 6;
    case FactorKind::Elevation: return 1;
    case FactorKind::Range: return 1;
    case FactorKind::Hover: return 3;
    case FactorKind::VelocityPrior: return 3;
    case FactorKind::ImuPreint: return 15;
    case FactorKind::UgvPosePrior: return 3;
  }
  return 0;
}

struct ImuMeasurement {
  PreintegratedImu preintegrated;
  Vec3 gravity = ned_gravity();
};

/// Kind-specific payload: Pose3 (PosePrior), double (Elevation, Range),
/// Vec3 (VelocityPrior, UgvPosePrior), ImuMeasurement (ImuPreint),
/// monostate (Hover).
using Measurement =
    std::variant<std::monostate, double, Vec3, Pose3, ImuMeasurement>;

struct FactorSpec {
  FactorKind kind;
  std::vector<StateKey> keys;
  Measurement measurement;
  DiagonalNoise noise;

  int dim() const { return residual_dim(kind); }
};

inline void validate(const FactorSpec& f) {
  const auto fail = [&](const std::string& why) {
    throw std::invalid_argument(std::string(to_string(f.kind)) +
                                " factor: " + why);
  };
  if (f.noise.dim() != f.dim()) fail("noise dimension mismatch");
  const std::size_t arity =
      (f.kind == FactorKind::ImuPreint || f.kind == FactorKind::Range) ? 2 : 1;
  if (f.keys.size() != arity) fail("wrong number of keys");
  switch (f.kind) {
    case FactorKind::ImuPreint:
      if (f.keys[0].chain != Chain::Uav || f.keys[1].chain != Chain::Uav ||
          f.keys[1].index != f.keys[0].index + 1) {
        fail("must bind two consecutive UAV keys");
      }
      if (!(std::get<ImuMeasurement>(f.measurement).preintegrated.dt_total >
            0.0)) {
        fail("preintegration interval must be positive");
      }
      break;
    case FactorKind::Range:
      if (f.keys[0].chain != Chain::Uav || f.keys[1].chain != Chain::Ugv) {
        fail("must bind one UAV key and one UGV key");
      }
      if (std::get<double>(f.measurement) < 0.0) fail("negative range");
      break;
    case FactorKind::UgvPosePrior:
      if (f.keys[0].chain != Chain::Ugv) fail("must bind a UGV key");
      break;
    default:
      if (f.keys[0].chain != Chain::Uav) fail("must bind a UAV key");
  }
}

inline FactorSpec make_pose_prior(StateKey k, const Pose3& z,
                                  DiagonalNoise noise) {
  return {FactorKind::PosePrior, {k}, z, std::move(noise)};
}
inline FactorSpec make_elevation(StateKey k, double z_alt,
                                 DiagonalNoise noise) {
  return {FactorKind::Elevation, {k}, z_alt, std::move(noise)};
}
inline FactorSpec make_range(StateKey uav, StateKey ugv, double z,
                             DiagonalNoise noise) {
  return {FactorKind::Range, {uav, ugv}, z, std::move(noise)};
}
inline FactorSpec make_hover(StateKey k, DiagonalNoise noise) {
  return {FactorKind::Hover, {k}, std::monostate{}, std::move(noise)};
}
inline FactorSpec make_velocity_prior(StateKey k, const Vec3& z_v,
                                      DiagonalNoise noise) {
  return {FactorKind::VelocityPrior, {k}, z_v, std::move(noise)};
}
inline FactorSpec make_imu(StateKey i, StateKey j, PreintegratedImu pre,
                           DiagonalNoise noise,
                           const Vec3& gravity = ned_gravity()) {
  return {FactorKind::ImuPreint, {i, j},
          ImuMeasurement{std::move(pre), gravity}, std::move(noise)};
}
inline FactorSpec make_ugv_prior(StateKey k, const Vec3& z,
                                 DiagonalNoise noise) {
  return {FactorKind::UgvPosePrior, {k}, z, std::move(noise)};
}

/// Whitened residual and whitened Jacobian blocks, one per bound key.
struct Linearized {
  Eigen::VectorXd residual;
  std::array<Eigen::MatrixXd, 2> jacobians;
};

/// Evaluates a factor at the given states (one per key, in key order). UGV
/// states are read through their translation only.
inline Linearized linearize(const FactorSpec& f, const NavState& a,
                            const NavState* b, bool with_jacobians = true) {
  Linearized out;
  Eigen::VectorXd r(f.dim());
  Eigen::MatrixXd j0, j1;
  switch (f.kind) {
    case FactorKind::PosePrior: {
      const auto res = pose_prior_residual(a, std::get<Pose3>(f.measurement));
      r = res.residual;
      if (with_jacobians) j0 = res.d_state;
      break;
    }
    case FactorKind::Elevation: {
      const auto res =
          elevation_factor_residual(a, std::get<double>(f.measurement));
      r[0] = res.residual;
      if (with_jacobians) j0 = res.d_state;
      break;
    }
    case FactorKind::Range: {
      const auto res = range_factor_residual(a, b->pose.translation,
                                             std::get<double>(f.measurement));
      r[0] = res.residual;
      if (with_jacobians) {
        j0 = res.d_uav;
        j1 = res.d_ugv;
      }
      break;
    }
    case FactorKind::Hover: {
      const auto res = hover_factor_residual(a);
      r = res.residual;
      if (with_jacobians) j0 = res.d_state;
      break;
    }
    case FactorKind::VelocityPrior: {
      const auto res =
          velocity_prior_residual(a, std::get<Vec3>(f.measurement));
      r = res.residual;
      if (with_jacobians) j0 = res.d_state;
      break;
    }
    case FactorKind::ImuPreint: {
      const auto& m = std::get<ImuMeasurement>(f.measurement);
      const auto res = imu_factor_residual(a, *b, m.preintegrated, m.gravity);
      r = res.residual;
      if (with_jacobians) {
        j0 = res.d_i;
        j1 = res.d_j;
      }
      break;
    }
    case FactorKind::UgvPosePrior:
      r = a.pose.translation - std::get<Vec3>(f.measurement);
      if (with_jacobians) j0 = Eigen::Matrix3d::Identity();
      break;
  }
  const Eigen::VectorXd inv_sigma = f.noise.sigmas().cwiseInverse();
  out.residual = r.cwiseProduct(inv_sigma);
  if (with_jacobians) {
    out.jacobians[0] = inv_sigma.asDiagonal() * j0;
    if (j1.size() > 0) out.jacobians[1] = inv_sigma.asDiagonal() * j1;
  }
  return out;
}

/// Cost contribution 0.5 * ||whitened residual||^2.
inline double factor_cost(const FactorSpec& f, const NavState& a,
                          const NavState* b) {
  return 0.5 * linearize(f, a, b, false).residual.squaredNorm();
}

}  // namespace hoverfg
