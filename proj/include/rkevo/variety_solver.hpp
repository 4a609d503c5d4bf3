#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <set>
#include <string>
#include <vector>

#include "rkevo/es_engine.hpp"
#include "rkevo/order_conditions.hpp"

namespace rkevo {

// ---------------------------------------------------------------------------
// Generic staged solver over a chain of varieties X_1 ⊇ X_2 ⊇ ... ⊇ X_c.

using ScalarField = std::function<double(std::span<const double>)>;

struct StagedProblem {
  std::size_t dimension = 0;
  std::vector<ScalarField> generators;  // f_1..f_m
  std::vector<double> weights;          // r on the simplex; empty = uniform
  // Group boundaries k_1 < ... < k_c = m (stage j uses f_1..f_{k_j}).
  // Empty = even_split(m, group_count).
  std::vector<std::size_t> group_ends;
  std::size_t group_count = 1;
  std::vector<double> tube_radii;  // eps_1..eps_c
  ScalarField objective;           // final G
  // false: H_j uses the global weights r_i. true: weights renormalized over f_1..f_{k_j}.
  bool renormalize_weights = false;
  double penalty_factor = 1e3;
  // An empty stage archive aborts the solve instead of falling back to random init.
  bool strict_seeding = true;
};

/// k_i = i * floor(m / v) for 0 < i < v, and k_v = m.
std::vector<std::size_t> even_split(std::size_t m, std::size_t v);

struct StagedResult {
  std::vector<std::size_t> group_ends;
  std::vector<std::vector<std::vector<double>>> archives;  // per stage, points of eps(X_j)
  std::vector<ESRun> stage_runs;
  ESRun final_run;  // valid only when success
  bool success = false;
  std::size_t failed_stage = 0;  // 1-based; 0 when success
};

/**
 * Stage j minimizes H_j(x) = sum_{i <= k_j} r_i |f_i(x)|, seeded from the
 * stage j-1 archive, and archives every evaluated point with H_k(x) < eps_k
 * for all k <= j. The last step minimizes G(x) plus
 * penalty_factor * sum_k max(0, H_k(x) - eps_k), seeded from the stage c archive.
 */
StagedResult solve_staged(const StagedProblem& problem, const ESConfig& es);

// ---------------------------------------------------------------------------
// Feasible-point archives and Pareto fronts.

struct ArchiveRecord {
  int order = 0;
  std::vector<double> x;
  std::vector<double> metrics;  // order metrics for p = 1..order+1
  double fitness = 0.0;         // F_order
  std::size_t generation = 0;
  std::uint64_t seed = 0;
  std::uint64_t sequence = 0;   // insertion counter, tie-break for equal fitness
};

/**
 * Points of one order, bounded in size. When full, a new record replaces the
 * current worst (by fitness, then insertion sequence) if it ranks better.
 * A point already stored (bitwise equal x) is not added again.
 */
class Archive {
 public:
  Archive(int order, int stages, bool explicit_flag, std::size_t capacity = 10000);

  /// False if the point was already stored or ranks below a full archive's worst.
  bool insert(ArchiveRecord record);
  [[nodiscard]] std::vector<ArchiveRecord> sorted() const;  // best first
  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
  [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
  [[nodiscard]] int order() const noexcept { return order_; }
  [[nodiscard]] int stages() const noexcept { return stages_; }
  [[nodiscard]] bool is_explicit() const noexcept { return explicit_; }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t inserted() const noexcept { return next_sequence_; }

 private:
  int order_;
  int stages_;
  bool explicit_;
  std::size_t capacity_;
  std::uint64_t next_sequence_ = 0;
  std::vector<ArchiveRecord> records_;  // max-heap on (fitness, sequence)
  std::set<std::vector<double>> stored_;
};

/// a dominates b: a_i <= b_i for all i and a_i < b_i for some i.
bool dominates(std::span<const double> a, std::span<const double> b);

/// Indices of the non-dominated rows, in input order.
std::vector<std::size_t> non_dominated(const std::vector<std::vector<double>>& objectives);

struct ParetoMember {
  ArchiveRecord record;
  std::vector<double> errors;  // e(t) for t in T_{q+1}, signed
};

struct ParetoSet {
  int order = 0;
  std::vector<std::string> tree_encodings;  // T_{q+1}
  std::vector<ParetoMember> members;
};

/// Front of `archive` under |e(t)|, t in T_{q+1}; members ordered by fitness.
ParetoSet pareto_front(const Archive& archive);

// ---------------------------------------------------------------------------
// Runge-Kutta specialization.

struct EvolveConfig {
  int stages = 3;
  bool explicit_flag = true;
  int start_order = 2;
  int max_order = 10;  // last q attempted
  ESConfig es;         // targets are set per cycle
  double amplification = kDefaultAmplification;
  double base_tolerance = kDefaultBaseTolerance;
  bool penalty = true;
  double penalty_factor = 1e3;
  std::size_t restarts = 3;
  std::size_t archive_capacity = 10000;
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> log;
};

struct CycleOutcome {
  int q = 0;
  bool success = false;
  std::size_t evaluations = 0;
  std::size_t runs = 0;
  double best_fitness = 0.0;
  std::vector<double> best_x;
};

struct EvolveResult {
  std::map<int, Archive> archives;  // keyed by order
  int q_max = 0;                    // highest order with a non-empty archive (0 = none)
  std::vector<CycleOutcome> cycles;
  // Best point of the last cycle and its e(t) on T_{q_max+1}.
  std::vector<double> best_x;
  double best_fitness = 0.0;
  std::vector<std::string> best_error_trees;
  std::vector<double> best_errors;
  ParetoSet pareto;  // at q_max
};

/**
 * One cycle at order q: ES runs minimizing F_q (trees of order <= q+1, plus
 * the optional penalty on order metrics p <= q above c_p). Every evaluated
 * candidate feasible to order q+1 is stored in `next`; when `current` is
 * empty, candidates feasible to order q are stored there as well.
 * Returns whether `next` is non-empty.
 */
CycleOutcome run_cycle(const EvolveConfig& config, int q, Archive& current, Archive& next);

/// Cycles q = start_order, start_order+1, ... while each finds order-(q+1) points.
EvolveResult evolve_runge_kutta(const EvolveConfig& config);

/// Objective used by the cycle at order q, exposed for tests.
double cycle_objective(const ConditionSystem& system, std::span<const double> x, int q, bool penalty,
                       double penalty_factor);

}  // namespace rkevo
