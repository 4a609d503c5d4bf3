#include "rkevo/order_conditions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "rkevo/errors.hpp"

namespace rkevo {

namespace {

const std::vector<std::vector<TreeEntry>>& tree_catalog() {
  static const std::vector<std::vector<TreeEntry>> catalog = enumerate_trees(kMaxTreeOrder);
  return catalog;
}

const std::vector<TreeEntry>& trees_of_order(int order) {
  if (order < 1 || order > kMaxTreeOrder) {
    throw BoundsError("order must lie in [1, " + std::to_string(kMaxTreeOrder) + "]");
  }
  return tree_catalog()[static_cast<std::size_t>(order - 1)];
}

}  // namespace

// ---------------------------------------------------------------------------
// Thresholds

Thresholds::Thresholds(std::vector<double> per_order) : values_(std::move(per_order)) {
  for (double c : values_) {
    if (!(c > 0.0)) throw std::invalid_argument("thresholds must be positive");
  }
}

Thresholds Thresholds::defaults(int max_order, double amplification, double base_tolerance) {
  const std::vector<std::size_t> counts = cumulative_tree_counts(max_order);
  const double scale = amplification * base_tolerance;
  std::vector<double> values;
  values.reserve(counts.size());
  for (std::size_t n : counts) values.push_back(static_cast<double>(n) * scale);
  return Thresholds(std::move(values));
}

Thresholds Thresholds::uniform(int max_order, double tolerance) {
  if (max_order < 1) throw BoundsError("thresholds: max_order must be positive");
  return Thresholds(std::vector<double>(static_cast<std::size_t>(max_order), tolerance));
}

double Thresholds::at(int order) const {
  if (order < 1 || order > max_order()) {
    throw BoundsError("thresholds: no c_p for order " + std::to_string(order));
  }
  return values_[static_cast<std::size_t>(order - 1)];
}

// ---------------------------------------------------------------------------
// Direct evaluation by recursion over one tree.

Eigen::VectorXd elementary_weights(const ButcherTableau& tableau, const RootedTree& tree) {
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(tableau.stages());
  for (const auto& child : tree.children()) {
    phi = phi.cwiseProduct(tableau.a() * elementary_weights(tableau, child));
  }
  return phi;
}

double weighted_elementary_sum(const ButcherTableau& tableau, const RootedTree& tree) {
  return tableau.w().dot(elementary_weights(tableau, tree));
}

double error_coefficient(const ButcherTableau& tableau, const RootedTree& tree) {
  return 1.0 - static_cast<double>(gamma(tree)) * weighted_elementary_sum(tableau, tree);
}

double order_metric(const ButcherTableau& tableau, int order) {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& entry : trees_of_order(order)) {
    const auto a = static_cast<double>(entry.invariants.alpha);
    weighted += a * std::abs(error_coefficient(tableau, entry.tree));
    total += a;
  }
  return weighted / total;
}

double fitness(const ButcherTableau& tableau, int q) {
  if (q < 1 || q + 1 > kMaxTreeOrder) throw BoundsError("fitness: q out of range");
  double weighted = 0.0;
  double total = 0.0;
  for (int p = 1; p <= q + 1; ++p) {
    for (const auto& entry : trees_of_order(p)) {
      const auto a = static_cast<double>(entry.invariants.alpha);
      weighted += a * std::abs(error_coefficient(tableau, entry.tree));
      total += a;
    }
  }
  return weighted / total;
}

FeasibilityReport is_feasible_to_order(const ButcherTableau& tableau, int q, const Thresholds& thresholds) {
  if (q < 1) throw BoundsError("is_feasible_to_order: q must be positive");
  if (thresholds.max_order() < q) throw BoundsError("is_feasible_to_order: thresholds do not cover order q");
  FeasibilityReport report;
  report.feasible = true;
  for (int p = 1; p <= q; ++p) {
    const double metric = order_metric(tableau, p);
    report.metrics.push_back(metric);
    report.thresholds.push_back(thresholds.at(p));
    if (!(metric < thresholds.at(p))) report.feasible = false;
  }
  return report;
}

// ---------------------------------------------------------------------------
// ConditionSystem

ConditionSystem::ConditionSystem(int stages, int max_order, bool explicit_flag)
    : ConditionSystem(stages, max_order, explicit_flag,
                      Thresholds::defaults(std::clamp(max_order + 1, 1, kMaxTreeOrder))) {}

ConditionSystem::ConditionSystem(int stages, int max_order, bool explicit_flag, Thresholds thresholds)
    : stages_(stages), max_order_(max_order), explicit_(explicit_flag), thresholds_(std::move(thresholds)) {
  if (stages < 1) throw DimensionError("condition system: at least one stage is required");
  if (max_order < 1 || max_order + 1 > kMaxTreeOrder) {
    throw BoundsError("condition system: order must lie in [1, " + std::to_string(kMaxTreeOrder - 1) + "]");
  }
  if (thresholds_.max_order() < max_order + 1) {
    throw BoundsError("condition system: thresholds must cover orders 1.." + std::to_string(max_order + 1));
  }

  std::map<std::string, std::size_t, std::less<>> index_of;
  for (int p = 1; p <= max_order + 1; ++p) {
    order_begin_.push_back(trees_.size());
    double alpha_p = 0.0;
    for (const auto& entry : rkevo::trees_of_order(p)) {
      ConditionTree node{entry.tree, entry.invariants, {}, 0.0};
      for (const auto& child : entry.tree.children()) node.children.push_back(index_of.at(child.encoding()));
      index_of.emplace(entry.tree.encoding(), trees_.size());
      alpha_p += static_cast<double>(entry.invariants.alpha);
      trees_.push_back(std::move(node));
    }
    alpha_sums_.push_back(alpha_p);
    alpha_total_ += alpha_p;
  }
  order_begin_.push_back(trees_.size());
  for (auto& node : trees_) node.weight = static_cast<double>(node.invariants.alpha) / alpha_total_;
}

std::span<const ConditionTree> ConditionSystem::trees_of_order(int order) const {
  const std::size_t begin = first_index(order);
  return std::span<const ConditionTree>(trees_).subspan(begin, order_begin_[static_cast<std::size_t>(order)] - begin);
}

std::size_t ConditionSystem::first_index(int order) const {
  if (order < 1 || order > tree_order_limit()) {
    throw BoundsError("condition system: order " + std::to_string(order) + " not carried");
  }
  return order_begin_[static_cast<std::size_t>(order - 1)];
}

double ConditionSystem::alpha_sum(int order) const {
  (void)first_index(order);
  return alpha_sums_[static_cast<std::size_t>(order - 1)];
}

void ConditionSystem::evaluate(std::span<const double> a, std::span<const double> w, bool lower_only,
                               std::span<double> out) const {
  const auto s = static_cast<std::size_t>(stages_);
  const std::size_t n = trees_.size();
  if (out.size() != n) throw DimensionError("condition system: output span has wrong size");

  // phi[i*s + j] = Phi_j(tree i); aphi = A * phi. Children always precede
  // their parent, so one forward sweep suffices. The top order is never a
  // child, so its aphi rows are skipped.
  std::vector<double> phi(n * s, 1.0);
  const std::size_t child_capable = order_begin_[static_cast<std::size_t>(max_order_)];
  std::vector<double> aphi(child_capable * s, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    double* phi_i = phi.data() + i * s;
    for (std::size_t child : trees_[i].children) {
      const double* aphi_c = aphi.data() + child * s;
      for (std::size_t j = 0; j < s; ++j) phi_i[j] *= aphi_c[j];
    }
    if (i < child_capable) {
      double* aphi_i = aphi.data() + i * s;
      for (std::size_t r = 0; r < s; ++r) {
        const std::size_t col_end = lower_only ? r : s;
        double acc = 0.0;
        for (std::size_t k = 0; k < col_end; ++k) acc += a[r * s + k] * phi_i[k];
        aphi_i[r] = acc;
      }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < s; ++j) sum += w[j] * phi_i[j];
    out[i] = 1.0 - static_cast<double>(trees_[i].invariants.gamma) * sum;
  }
}

void ConditionSystem::error_coefficients(const ButcherTableau& tableau, std::span<double> out) const {
  if (tableau.stages() != stages_) throw DimensionError("condition system: stage count mismatch");
  const auto s = static_cast<std::size_t>(stages_);
  std::vector<double> a(s * s);
  std::vector<double> w(s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      a[i * s + j] = tableau.a()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    w[i] = tableau.w()(static_cast<Eigen::Index>(i));
  }
  evaluate(a, w, tableau.is_explicit(), out);
}

void ConditionSystem::error_coefficients(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dimension()) throw DimensionError("condition system: parameter vector has wrong size");
  const auto s = static_cast<std::size_t>(stages_);
  std::vector<double> a(s * s, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t row_end = explicit_ ? i : s;
    for (std::size_t j = 0; j < row_end; ++j) a[i * s + j] = x[k++];
  }
  evaluate(a, x.subspan(k, s), explicit_, out);
}

std::vector<double> ConditionSystem::error_coefficients(const ButcherTableau& tableau) const {
  std::vector<double> out(trees_.size());
  error_coefficients(tableau, out);
  return out;
}

std::vector<double> ConditionSystem::order_metrics(std::span<const double> errors) const {
  if (errors.size() != trees_.size()) throw DimensionError("condition system: error span has wrong size");
  std::vector<double> metrics;
  metrics.reserve(static_cast<std::size_t>(tree_order_limit()));
  for (int p = 1; p <= tree_order_limit(); ++p) {
    const std::size_t begin = order_begin_[static_cast<std::size_t>(p - 1)];
    const std::size_t end = order_begin_[static_cast<std::size_t>(p)];
    double weighted = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      weighted += static_cast<double>(trees_[i].invariants.alpha) * std::abs(errors[i]);
    }
    metrics.push_back(weighted / alpha_sums_[static_cast<std::size_t>(p - 1)]);
  }
  return metrics;
}

double ConditionSystem::fitness(std::span<const double> errors) const {
  if (errors.size() != trees_.size()) throw DimensionError("condition system: error span has wrong size");
  double weighted = 0.0;
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    weighted += static_cast<double>(trees_[i].invariants.alpha) * std::abs(errors[i]);
  }
  return weighted / alpha_total_;
}

double ConditionSystem::fitness_of(std::span<const double> x) const {
  std::vector<double> errors(trees_.size());
  error_coefficients(x, errors);
  return fitness(errors);
}

FeasibilityReport ConditionSystem::feasibility(std::span<const double> errors, int q) const {
  if (q < 1 || q > tree_order_limit()) throw BoundsError("condition system: feasibility order not carried");
  const std::vector<double> metrics = order_metrics(errors);
  FeasibilityReport report;
  report.feasible = true;
  for (int p = 1; p <= q; ++p) {
    const double metric = metrics[static_cast<std::size_t>(p - 1)];
    report.metrics.push_back(metric);
    report.thresholds.push_back(thresholds_.at(p));
    if (!(metric < thresholds_.at(p))) report.feasible = false;
  }
  return report;
}

}  // namespace rkevo
