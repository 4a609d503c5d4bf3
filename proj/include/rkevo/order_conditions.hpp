#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rkevo/rooted_tree.hpp"
#include "rkevo/tableau.hpp"

namespace rkevo {

/// Default tube parameters: c_p = N_p * amplification * base_tolerance.
inline constexpr double kDefaultAmplification = 4.0;
inline constexpr double kDefaultBaseTolerance = 1e-15;

/**
 * Per-order feasibility thresholds c_1..c_Q.
 *
 * The default construction multiplies the cumulative number of condition
 * equations N_p = |T_1| + ... + |T_p| by amplification * base tolerance, so
 * c_4 = 8 * 4e-15 and c_10 = 1205 * 4e-15.
 */
class Thresholds {
 public:
  static Thresholds defaults(int max_order, double amplification = kDefaultAmplification,
                             double base_tolerance = kDefaultBaseTolerance);
  static Thresholds uniform(int max_order, double tolerance);
  explicit Thresholds(std::vector<double> per_order);

  /// c_p for 1 <= p <= max_order(); throws BoundsError otherwise.
  [[nodiscard]] double at(int order) const;
  [[nodiscard]] int max_order() const noexcept { return static_cast<int>(values_.size()); }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// Phi_j(tree), j = 1..s, by Phi(leaf) = 1, Phi([t_1..t_m]) = prod_i (A Phi(t_i)).
[[nodiscard]] Eigen::VectorXd elementary_weights(const ButcherTableau& tableau, const RootedTree& tree);

/// sum_j w_j Phi_j(tree); the order condition for the tree is this value == 1/gamma.
[[nodiscard]] double weighted_elementary_sum(const ButcherTableau& tableau, const RootedTree& tree);

/// e(t) = 1 - gamma(t) * sum_j w_j Phi_j(t).
[[nodiscard]] double error_coefficient(const ButcherTableau& tableau, const RootedTree& tree);

/// (sum_{T_p} alpha |e|) / (sum_{T_p} alpha).
[[nodiscard]] double order_metric(const ButcherTableau& tableau, int order);

/// Alpha-weighted mean |e| over all trees of order <= q+1.
[[nodiscard]] double fitness(const ButcherTableau& tableau, int q);

struct FeasibilityReport {
  bool feasible = false;
  std::vector<double> metrics;     // index p-1
  std::vector<double> thresholds;  // index p-1
};

/// Feasible iff order_metric(p) < c_p for every p = 1..q.
[[nodiscard]] FeasibilityReport is_feasible_to_order(const ButcherTableau& tableau, int q,
                                                     const Thresholds& thresholds);

/// One condition of the system: tree plus indices of its children in the
/// system's tree list (every child precedes its parent).
struct ConditionTree {
  RootedTree tree;
  TreeInvariants invariants;
  std::vector<std::size_t> children;
  double weight = 0.0;  // r_t = alpha(t) / sum of alpha over orders 1..q+1
};

/**
 * Order-condition system for s-stage methods targeting order q: all trees of
 * order 1..q+1 with their weights r_t and the default thresholds c_1..c_{q+1}.
 *
 * Evaluation is pure and reentrant; scratch space is per call.
 */
class ConditionSystem {
 public:
  /// Uses Thresholds::defaults(max_order + 1). Throws BoundsError unless
  /// 1 <= max_order < kMaxTreeOrder.
  ConditionSystem(int stages, int max_order, bool explicit_flag);
  /// `thresholds` must cover orders 1..max_order+1.
  ConditionSystem(int stages, int max_order, bool explicit_flag, Thresholds thresholds);

  [[nodiscard]] int stages() const noexcept { return stages_; }
  [[nodiscard]] int max_order() const noexcept { return max_order_; }
  [[nodiscard]] bool is_explicit() const noexcept { return explicit_; }
  /// Highest tree order carried (max_order + 1).
  [[nodiscard]] int tree_order_limit() const noexcept { return max_order_ + 1; }

  [[nodiscard]] std::span<const ConditionTree> trees() const noexcept { return trees_; }
  [[nodiscard]] std::span<const ConditionTree> trees_of_order(int order) const;
  [[nodiscard]] std::size_t first_index(int order) const;
  [[nodiscard]] double alpha_sum(int order) const;
  [[nodiscard]] const Thresholds& thresholds() const noexcept { return thresholds_; }
  [[nodiscard]] std::size_t dimension() const { return ButcherTableau::parameter_count(stages_, explicit_); }

  /// e(t) for every tree of the system, in trees() order.
  void error_coefficients(const ButcherTableau& tableau, std::span<double> out) const;
  /// Same, from a flat parameter vector in the tableau layout.
  void error_coefficients(std::span<const double> x, std::span<double> out) const;
  [[nodiscard]] std::vector<double> error_coefficients(const ButcherTableau& tableau) const;

  /// Per-order metrics for orders 1..tree_order_limit() computed from e values.
  [[nodiscard]] std::vector<double> order_metrics(std::span<const double> errors) const;

  /// F_q from precomputed e values.
  [[nodiscard]] double fitness(std::span<const double> errors) const;

  /// F_q directly from a flat parameter vector (the optimizer objective).
  [[nodiscard]] double fitness_of(std::span<const double> x) const;

  /// Feasibility to order q <= tree_order_limit() against the system thresholds.
  [[nodiscard]] FeasibilityReport feasibility(std::span<const double> errors, int q) const;

 private:
  int stages_;
  int max_order_;
  bool explicit_;
  Thresholds thresholds_;
  std::vector<ConditionTree> trees_;
  std::vector<std::size_t> order_begin_;  // order p occupies [order_begin_[p-1], order_begin_[p])
  std::vector<double> alpha_sums_;  // index p-1
  double alpha_total_ = 0.0;

  // Core evaluation on a row-major s x s matrix and weight vector.
  void evaluate(std::span<const double> a, std::span<const double> w, bool lower_only,
                std::span<double> out) const;
};

}  // namespace rkevo
