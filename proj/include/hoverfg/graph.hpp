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

// Growing factor graph over UAV and UGV state chains, solved by
// Levenberg-Marquardt on the block-sparse normal equations.
//
// Incremental operation re-linearizes the whole graph after each new epoch,
// warm-started from the previous estimate, so an incremental run ends at the
// same optimum as a cold batch solve of the final graph.

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hoverfg/factors.hpp"

namespace hoverfg {

/// Structural misuse of a graph: duplicate or dangling keys, missing IMU
/// links, out-of-order timestamps.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A residual evaluated to NaN/Inf. Carries the offending factor's index.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t factor_index)
      : std::runtime_error(what), factor_index_(factor_index) {}
  std::size_t factor_index() const { return factor_index_; }

 private:
  std::size_t factor_index_;
};

struct HoverInterval {
  double start = 0.0;
  double end = std::numeric_limits<double>::infinity();

  bool contains(double t) const {
    constexpr double kEps = 1e-9;
    return t >= start - kEps && t <= end + kEps;
  }
};

struct NewState {
  StateKey key;
  std::optional<NavState> initial;  // defaults to an IMU-propagated guess
};

class FactorGraph {
 public:
  FactorGraph() = default;

  /// Enables automatic hover factors with the given isotropic sigma (m/s).
  void enable_hover(double sigma) {
    hover_noise_ = DiagonalNoise::isotropic(3, sigma);
  }
  bool hover_enabled() const { return hover_noise_.has_value(); }

  /// Feeds one autopilot hover-flag edge. An entering edge opens an interval
  /// that stays open until the matching exit edge.
  void hover_flag(double t, bool entering) {
    if (entering) {
      if (!hover_intervals_.empty() &&
          std::isinf(hover_intervals_.back().end)) {
        return;  // already hovering
      }
      hover_intervals_.push_back({t});
    } else if (!hover_intervals_.empty() &&
               std::isinf(hover_intervals_.back().end)) {
      hover_intervals_.back().end = t;
    }
  }

  bool in_hover_interval(double t) const {
    return std::any_of(hover_intervals_.begin(), hover_intervals_.end(),
                       [t](const HoverInterval& h) { return h.contains(t); });
  }

  const std::vector<HoverInterval>& hover_intervals() const {
    return hover_intervals_;
  }

  /// Adds one state node together with the factors that become complete
  /// with it. Enforces the graph invariants; on error the graph is left
  /// unchanged.
  void add_epoch(const StateKey& key, std::optional<NavState> initial,
                 std::vector<FactorSpec> factors) {
    add_epoch(std::vector<NewState>{{key, std::move(initial)}},
              std::move(factors));
  }

  void add_epoch(const std::vector<NewState>& states,
                 std::vector<FactorSpec> factors) {
    // Validate everything before mutating.
    std::vector<StateKey> pending;
    for (const NewState& s : states) {
      if (contains(s.key) ||
          std::any_of(pending.begin(), pending.end(),
                      [&](const StateKey& p) { return p.same_node(s.key); })) {
        throw GraphError("add_epoch: duplicate key " + to_string(s.key));
      }
      const auto& last = last_time_[chain_slot(s.key.chain)];
      if (last && !(s.key.timestamp > *last)) {
        throw GraphError("add_epoch: timestamps must increase along a chain (" +
                         to_string(s.key) + ")");
      }
      pending.push_back(s.key);
    }
    const auto known = [&](const StateKey& k) {
      return contains(k) ||
             std::any_of(pending.begin(), pending.end(),
                         [&](const StateKey& p) { return p.same_node(k); });
    };
    for (const FactorSpec& f : factors) {
      validate(f);
      for (const StateKey& k : f.keys) {
        if (!known(k)) {
          throw GraphError("add_epoch: " + std::string(to_string(f.kind)) +
                           " factor references unknown key " + to_string(k));
        }
      }
    }
    for (const StateKey& k : pending) {
      if (k.chain != Chain::Uav) continue;
      const bool first_uav = !last_uav_.has_value() &&
                             std::none_of(pending.begin(), pending.end(),
                                          [&](const StateKey& p) {
                                            return p.chain == Chain::Uav &&
                                                   p.index < k.index;
                                          });
      const auto links = std::count_if(
          factors.begin(), factors.end(), [&](const FactorSpec& f) {
            return f.kind == FactorKind::ImuPreint && f.keys[1].same_node(k);
          });
      if (first_uav) {
        if (links != 0) {
          throw GraphError("add_epoch: first UAV key cannot have an IMU link");
        }
      } else if (links != 1) {
        throw GraphError("add_epoch: UAV key " + to_string(k) +
                         " needs exactly one ImuPreint link to its "
                         "predecessor");
      }
    }
    for (const FactorSpec& f : factors) {
      if (f.kind == FactorKind::Hover &&
          std::count_if(factors.begin(), factors.end(),
                        [&](const FactorSpec& g) {
                          return g.kind == FactorKind::Hover &&
                                 g.keys[0].same_node(f.keys[0]);
                        }) > 1) {
        throw GraphError("add_epoch: more than one Hover factor on " +
                         to_string(f.keys[0]));
      }
    }

    // Auto-attach hover factors for UAV keys inside a flagged interval.
    if (hover_noise_) {
      for (const StateKey& k : pending) {
        if (k.chain != Chain::Uav || !in_hover_interval(k.timestamp)) continue;
        const bool has = std::any_of(
            factors.begin(), factors.end(), [&](const FactorSpec& f) {
              return f.kind == FactorKind::Hover && f.keys[0].same_node(k);
            });
        if (!has) factors.push_back(make_hover(k, *hover_noise_));
      }
    }

    // Mutate: states first (UAV initial guesses may use IMU links).
    for (const NewState& s : states) {
      NavState init;
      if (s.initial) {
        init = *s.initial;
      } else {
        init = default_initial(s.key, factors);
      }
      const std::size_t slot = keys_.size();
      keys_.push_back(s.key);
      values_.push_back(init);
      slot_of_[node_id(s.key)] = slot;
      offsets_.push_back(dim_);
      dim_ += tangent_dim(s.key.chain);
      last_time_[chain_slot(s.key.chain)] = s.key.timestamp;
      if (s.key.chain == Chain::Uav) last_uav_ = s.key;
    }
    for (FactorSpec& f : factors) {
      std::array<int, 2> slots{-1, -1};
      for (std::size_t i = 0; i < f.keys.size(); ++i) {
        slots[i] = static_cast<int>(slot_of_.at(node_id(f.keys[i])));
      }
      if (f.kind == FactorKind::Hover) hover_set_.insert(f.keys[0].index);
      factor_slots_.push_back(slots);
      factors_.push_back(std::move(f));
    }
    ++structure_version_;
  }

  bool contains(const StateKey& k) const {
    return slot_of_.count(node_id(k)) != 0;
  }

  const NavState& value(const StateKey& k) const {
    const auto it = slot_of_.find(node_id(k));
    if (it == slot_of_.end()) {
      throw GraphError("value: unknown key " + to_string(k));
    }
    return values_[it->second];
  }

  std::size_t num_states() const { return keys_.size(); }
  std::size_t num_factors() const { return factors_.size(); }
  const std::vector<StateKey>& keys() const { return keys_; }
  const std::vector<NavState>& values() const { return values_; }
  std::vector<NavState>& mutable_values() { return values_; }
  const std::vector<FactorSpec>& factors() const { return factors_; }
  const std::vector<std::array<int, 2>>& factor_slots() const {
    return factor_slots_;
  }
  const std::vector<int>& offsets() const { return offsets_; }
  int tangent_size() const { return dim_; }
  std::size_t structure_version() const { return structure_version_; }

  /// UAV indices carrying a Hover factor.
  const std::set<long>& hover_set() const { return hover_set_; }

  std::optional<StateKey> last_uav_key() const { return last_uav_; }

  /// States sorted by UAV index, for trajectory extraction.
  std::vector<std::pair<StateKey, NavState>> uav_trajectory() const {
    std::vector<std::pair<StateKey, NavState>> out;
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (keys_[i].chain == Chain::Uav) out.emplace_back(keys_[i], values_[i]);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.first.index < b.first.index;
    });
    return out;
  }

  /// Returns a copy without the factors matching `drop`.
  template <class Pred>
  FactorGraph without_factors(Pred drop) const {
    FactorGraph g = *this;
    g.factors_.clear();
    g.factor_slots_.clear();
    g.hover_set_.clear();
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (drop(factors_[i])) continue;
      if (factors_[i].kind == FactorKind::Hover) {
        g.hover_set_.insert(factors_[i].keys[0].index);
      }
      g.factors_.push_back(factors_[i]);
      g.factor_slots_.push_back(factor_slots_[i]);
    }
    ++g.structure_version_;
    return g;
  }

 private:
  static long long node_id(const StateKey& k) {
    return (static_cast<long long>(k.index) << 1) |
           (k.chain == Chain::Ugv ? 1 : 0);
  }
  static int chain_slot(Chain c) { return c == Chain::Uav ? 0 : 1; }

  NavState default_initial(const StateKey& key,
                           const std::vector<FactorSpec>& factors) const {
    for (const FactorSpec& f : factors) {
      if (key.chain == Chain::Uav && f.kind == FactorKind::ImuPreint &&
          f.keys[1].same_node(key) && contains(f.keys[0])) {
        const auto& m = std::get<ImuMeasurement>(f.measurement);
        return predict(value(f.keys[0]), m.preintegrated, m.gravity);
      }
      if (f.keys[0].same_node(key) && f.kind == FactorKind::PosePrior) {
        NavState s;
        s.pose = std::get<Pose3>(f.measurement);
        return s;
      }
      if (f.keys[0].same_node(key) && f.kind == FactorKind::UgvPosePrior) {
        return NavState::at(std::get<Vec3>(f.measurement));
      }
    }
    if (key.chain == Chain::Uav && last_uav_) return value(*last_uav_);
    return NavState{};
  }

  std::vector<StateKey> keys_;
  std::vector<NavState> values_;
  std::vector<int> offsets_;
  int dim_ = 0;
  std::unordered_map<long long, std::size_t> slot_of_;
  std::vector<FactorSpec> factors_;
  std::vector<std::array<int, 2>> factor_slots_;
  std::set<long> hover_set_;
  std::optional<DiagonalNoise> hover_noise_;
  std::vector<HoverInterval> hover_intervals_;
  std::array<std::optional<double>, 2> last_time_;
  std::optional<StateKey> last_uav_;
  std::size_t structure_version_ = 0;
};

// ---------------------------------------------------------------------------
// Cost
// ---------------------------------------------------------------------------

namespace detail {

inline const NavState* second_state(const FactorGraph& g,
                                    const std::vector<NavState>& values,
                                    std::size_t i) {
  const int s = g.factor_slots()[i][1];
  return s >= 0 ? &values[static_cast<std::size_t>(s)] : nullptr;
}

inline double cost_of(const FactorGraph& g,
                      const std::vector<NavState>& values) {
  double cost = 0.0;
  for (std::size_t i = 0; i < g.num_factors(); ++i) {
    const auto& slots = g.factor_slots()[i];
    const Linearized lin =
        linearize(g.factors()[i], values[static_cast<std::size_t>(slots[0])],
                  second_state(g, values, i), false);
    const double c = 0.5 * lin.residual.squaredNorm();
    if (!std::isfinite(c)) {
      throw NumericalError("non-finite residual in factor " +
                               std::to_string(i) + " (" +
                               std::string(to_string(g.factors()[i].kind)) +
                               " on " + to_string(g.factors()[i].keys[0]) +
                               ")",
                           i);
    }
    cost += c;
  }
  return cost;
}

}  // namespace detail

/// Sum over factors of 0.5 * ||whitened residual||^2.
inline double total_cost(const FactorGraph& g) {
  return detail::cost_of(g, g.values());
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt
// ---------------------------------------------------------------------------

struct LmSettings {
  int max_iters = 50;
  double lambda_init = 1e-4;
  double cost_tol = 1e-8;    // relative cost decrease
  double delta_tol = 1e-10;  // step norm
  double lambda_max = 1e10;
  double abs_cost_tol = 1e-20;
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  std::vector<double> cost_trace;  // initial cost, then each accepted step
  std::string message;
};

namespace detail {

/// Lower-triangular CSC pattern of the block-sparse Hessian with direct
/// addressing of every (row block, column block) pair.
class HessianPattern {
 public:
  explicit HessianPattern(const FactorGraph& g) {
    const std::size_t n_vars = g.num_states();
    const std::vector<int>& off = g.offsets();
    dims_.resize(n_vars);
    for (std::size_t v = 0; v < n_vars; ++v) {
      dims_[v] = tangent_dim(g.keys()[v].chain);
    }
    // neighbors_[c] = sorted row blocks r > c that couple with column c.
    std::vector<std::vector<int>> neighbors(n_vars);
    for (const auto& s : g.factor_slots()) {
      if (s[1] < 0) continue;
      const int lo = std::min(s[0], s[1]);
      const int hi = std::max(s[0], s[1]);
      neighbors[static_cast<std::size_t>(lo)].push_back(hi);
    }
    const int n = g.tangent_size();
    H_.resize(n, n);
    std::vector<int> outer(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> inner;
    nb_offset_.assign(n_vars, {});
    for (std::size_t c = 0; c < n_vars; ++c) {
      auto& nb = neighbors[c];
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      int acc = 0;
      for (int r : nb) {
        nb_offset_[c][r] = acc;
        acc += dims_[static_cast<std::size_t>(r)];
      }
      const int d = dims_[c];
      for (int k = 0; k < d; ++k) {
        const int col = off[c] + k;
        outer[static_cast<std::size_t>(col)] = static_cast<int>(inner.size());
        for (int rr = k; rr < d; ++rr) inner.push_back(off[c] + rr);
        for (int r : nb) {
          for (int rr = 0; rr < dims_[static_cast<std::size_t>(r)]; ++rr) {
            inner.push_back(off[static_cast<std::size_t>(r)] + rr);
          }
        }
      }
    }
    outer[static_cast<std::size_t>(n)] = static_cast<int>(inner.size());
    H_.resizeNonZeros(static_cast<Eigen::Index>(inner.size()));
    std::copy(outer.begin(), outer.end(), H_.outerIndexPtr());
    std::copy(inner.begin(), inner.end(), H_.innerIndexPtr());
    std::fill_n(H_.valuePtr(), inner.size(), 0.0);
    diag_index_.resize(static_cast<std::size_t>(n));
    for (int col = 0; col < n; ++col) {
      diag_index_[static_cast<std::size_t>(col)] = outer[static_cast<std::size_t>(col)];
    }
    offsets_ = off;
  }

  void zero() { std::fill_n(H_.valuePtr(), H_.nonZeros(), 0.0); }

  /// Accumulates block += M for row block r, column block c (r >= c).
  void add_block(int r, int c, const Eigen::MatrixXd& M) {
    double* val = H_.valuePtr();
    const int* outer = H_.outerIndexPtr();
    const int dc = dims_[static_cast<std::size_t>(c)];
    if (r == c) {
      for (int k = 0; k < dc; ++k) {
        const int base = outer[offsets_[static_cast<std::size_t>(c)] + k];
        for (int rr = k; rr < dc; ++rr) val[base + rr - k] += M(rr, k);
      }
      return;
    }
    const int nb = nb_offset_[static_cast<std::size_t>(c)].at(r);
    const int dr = dims_[static_cast<std::size_t>(r)];
    for (int k = 0; k < dc; ++k) {
      const int base =
          outer[offsets_[static_cast<std::size_t>(c)] + k] + (dc - k) + nb;
      for (int rr = 0; rr < dr; ++rr) val[base + rr] += M(rr, k);
    }
  }

  void add_to_diagonal(double lambda) {
    for (int idx : diag_index_) H_.valuePtr()[idx] += lambda;
  }

  Eigen::SparseMatrix<double>& matrix() { return H_; }

 private:
  Eigen::SparseMatrix<double> H_;
  std::vector<int> dims_;
  std::vector<int> offsets_;
  std::vector<std::map<int, int>> nb_offset_;
  std::vector<int> diag_index_;
};

struct LinearSystem {
  Eigen::VectorXd gradient;  // J^T r
  double cost = 0.0;
};

inline LinearSystem assemble(const FactorGraph& g,
                             const std::vector<NavState>& values,
                             HessianPattern& pattern) {
  LinearSystem sys;
  sys.gradient = Eigen::VectorXd::Zero(g.tangent_size());
  pattern.zero();
  const std::vector<int>& off = g.offsets();
  for (std::size_t i = 0; i < g.num_factors(); ++i) {
    const auto& slots = g.factor_slots()[i];
    const Linearized lin =
        linearize(g.factors()[i], values[static_cast<std::size_t>(slots[0])],
                  second_state(g, values, i), true);
    const double c = 0.5 * lin.residual.squaredNorm();
    if (!std::isfinite(c) || !lin.jacobians[0].allFinite() ||
        (slots[1] >= 0 && !lin.jacobians[1].allFinite())) {
      throw NumericalError("non-finite linearization in factor " +
                               std::to_string(i) + " (" +
                               std::string(to_string(g.factors()[i].kind)) +
                               " on " + to_string(g.factors()[i].keys[0]) +
                               ")",
                           i);
    }
    sys.cost += c;
    const int arity = slots[1] >= 0 ? 2 : 1;
    for (int a = 0; a < arity; ++a) {
      const Eigen::MatrixXd& Ja = lin.jacobians[static_cast<std::size_t>(a)];
      const int sa = slots[static_cast<std::size_t>(a)];
      sys.gradient.segment(off[static_cast<std::size_t>(sa)], Ja.cols()) +=
          Ja.transpose() * lin.residual;
      for (int b = 0; b < arity; ++b) {
        const int sb = slots[static_cast<std::size_t>(b)];
        if (sa < sb) continue;
        const Eigen::MatrixXd& Jb =
            lin.jacobians[static_cast<std::size_t>(b)];
        pattern.add_block(sa, sb, Ja.transpose() * Jb);
      }
    }
  }
  return sys;
}

inline std::vector<NavState> retract_all(const FactorGraph& g,
                                         const std::vector<NavState>& values,
                                         const Eigen::VectorXd& delta) {
  std::vector<NavState> out(values.size());
  const std::vector<int>& off = g.offsets();
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (g.keys()[v].chain == Chain::Uav) {
      out[v] = navstate_retract(values[v], delta.segment<15>(off[v]));
    } else {
      out[v] = values[v];
      out[v].pose.translation += delta.segment<3>(off[v]);
    }
  }
  return out;
}

}  // namespace detail

/// Minimizes total_cost(g) in place. Never throws for ill-conditioning
/// (reported as non-convergence); throws NumericalError for NaN residuals.
inline SolveReport optimize(FactorGraph& g, const LmSettings& settings = {}) {
  SolveReport report;
  if (g.num_states() == 0) {
    report.converged = true;
    report.cost_trace.push_back(0.0);
    report.message = "empty graph";
    return report;
  }
  detail::HessianPattern pattern(g);
  // States are stored in time order, so the Hessian is close to banded and
  // the natural ordering produces little fill-in.
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::NaturalOrdering<int>>
      solver;
  bool analyzed = false;

  std::vector<NavState> values = g.values();
  double lambda = settings.lambda_init;
  detail::LinearSystem sys = detail::assemble(g, values, pattern);
  report.initial_cost = sys.cost;
  report.cost_trace.push_back(sys.cost);
  double cost = sys.cost;
  bool need_relinearize = false;

  while (report.iterations < settings.max_iters) {
    if (cost <= settings.abs_cost_tol) {
      report.converged = true;
      report.message = "cost below absolute tolerance";
      break;
    }
    if (need_relinearize) {
      sys = detail::assemble(g, values, pattern);
      need_relinearize = false;
    }
    ++report.iterations;
    pattern.add_to_diagonal(lambda);
    if (!analyzed) {
      solver.analyzePattern(pattern.matrix());
      analyzed = true;
    }
    solver.factorize(pattern.matrix());
    pattern.add_to_diagonal(-lambda);
    Eigen::VectorXd delta;
    bool solved = solver.info() == Eigen::Success;
    if (solved) {
      delta = solver.solve(-sys.gradient);
      solved = delta.allFinite();
    }
    if (!solved) {
      lambda *= 10.0;
      if (lambda > settings.lambda_max) {
        report.message = "normal equations singular after damping escalation";
        break;
      }
      continue;
    }
    const double step = delta.norm();
    std::vector<NavState> candidate = detail::retract_all(g, values, delta);
    double new_cost;
    try {
      new_cost = detail::cost_of(g, candidate);
    } catch (const NumericalError&) {
      new_cost = std::numeric_limits<double>::infinity();
    }
    if (new_cost < cost) {
      const double rel = (cost - new_cost) / std::max(cost, 1e-300);
      values = std::move(candidate);
      cost = new_cost;
      report.cost_trace.push_back(cost);
      lambda = std::max(lambda / 10.0, 1e-12);
      need_relinearize = true;
      if (rel < settings.cost_tol || step < settings.delta_tol) {
        report.converged = true;
        report.message = rel < settings.cost_tol ? "relative cost change"
                                                 : "step norm";
        break;
      }
    } else {
      if (step < settings.delta_tol ||
          (std::isfinite(new_cost) &&
           new_cost - cost <= settings.cost_tol * cost)) {
        // No further decrease is available at this linearization.
        report.converged = true;
        report.message = "no further decrease";
        break;
      }
      lambda *= 10.0;
      if (lambda > settings.lambda_max) {
        report.message = "damping escalation exhausted";
        break;
      }
    }
  }
  if (!report.converged && report.message.empty()) {
    report.message = "maximum iterations reached";
  }
  report.final_cost = cost;
  g.mutable_values() = std::move(values);
  return report;
}

/// Adds an epoch and re-optimizes the whole graph from the current estimate.
inline SolveReport incremental_update(FactorGraph& g,
                                      const std::vector<NewState>& states,
                                      std::vector<FactorSpec> factors,
                                      const LmSettings& settings = {}) {
  g.add_epoch(states, std::move(factors));
  return optimize(g, settings);
}

}  // namespace hoverfg
