#include "rkevo/variety_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rkevo/errors.hpp"
#include "rkevo/random.hpp"

namespace rkevo {

namespace {

bool record_ranks_before(const ArchiveRecord& a, const ArchiveRecord& b) {
  if (a.fitness != b.fitness) return a.fitness < b.fitness;
  return a.sequence < b.sequence;
}

// Up to `count` distinct indices drawn uniformly from [0, n), in draw order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t k = std::min(n, count);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return mix_seed(master ^ mix_seed((a << 32) ^ b));
}

// Bounded list of (value, point), keeping the smallest values.
class PointPool {
 public:
  explicit PointPool(std::size_t capacity) : capacity_(capacity) {}

  void add(double value, std::span<const double> x) {
    items_.push_back({value, seq_++, {x.begin(), x.end()}});
    if (items_.size() >= 2 * capacity_) trim();
  }

  std::vector<std::vector<double>> points() {
    trim();
    std::vector<std::vector<double>> out;
    out.reserve(items_.size());
    for (const auto& it : items_) out.push_back(it.x);
    return out;
  }

 private:
  struct Item {
    double value;
    std::uint64_t seq;
    std::vector<double> x;
  };
  void trim() {
    std::sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) {
      return a.value != b.value ? a.value < b.value : a.seq < b.seq;
    });
    if (items_.size() > capacity_) items_.resize(capacity_);
  }
  std::size_t capacity_;
  std::uint64_t seq_ = 0;
  std::vector<Item> items_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Generic staged solver

std::vector<std::size_t> even_split(std::size_t m, std::size_t v) {
  if (v == 0 || v > m) throw std::invalid_argument("even_split: need 1 <= v <= m");
  std::vector<std::size_t> ends;
  const std::size_t step = m / v;
  for (std::size_t i = 1; i < v; ++i) ends.push_back(i * step);
  ends.push_back(m);
  return ends;
}

StagedResult solve_staged(const StagedProblem& problem, const ESConfig& es) {
  const std::size_t m = problem.generators.size();
  if (m == 0) throw std::invalid_argument("solve_staged: no generators");
  if (problem.dimension == 0) throw DimensionError("solve_staged: dimension must be positive");
  if (!problem.objective) throw std::invalid_argument("solve_staged: missing final objective");

  StagedResult result;
  result.group_ends = problem.group_ends.empty() ? even_split(m, problem.group_count) : problem.group_ends;
  const auto& ends = result.group_ends;
  const std::size_t c = ends.size();
  for (std::size_t j = 0; j < c; ++j) {
    if (ends[j] == 0 || ends[j] > m || (j > 0 && ends[j] <= ends[j - 1])) {
      throw std::invalid_argument("solve_staged: group boundaries must increase strictly within [1, m]");
    }
  }
  if (ends.back() != m) throw std::invalid_argument("solve_staged: groups must cover every generator");
  if (problem.tube_radii.size() != c) throw DimensionError("solve_staged: need one tube radius per group");
  for (double eps : problem.tube_radii) {
    if (!(eps > 0.0)) throw std::invalid_argument("solve_staged: tube radii must be positive");
  }

  std::vector<double> r = problem.weights;
  if (r.empty()) r.assign(m, 1.0 / static_cast<double>(m));
  if (r.size() != m) throw DimensionError("solve_staged: one weight per generator");
  double total = 0.0;
  for (double v : r) {
    if (!(v > 0.0)) throw std::invalid_argument("solve_staged: weights must be positive");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("solve_staged: weights must sum to 1");

  std::vector<double> group_mass(c, 0.0);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < ends[j]; ++i) group_mass[j] += r[i];
  }

  // H_1..H_c at x.
  auto stage_values = [&](std::span<const double> x) {
    std::vector<double> h(c, 0.0);
    double acc = 0.0;
    std::size_t i = 0;
    for (std::size_t j = 0; j < c; ++j) {
      for (; i < ends[j]; ++i) acc += r[i] * std::abs(problem.generators[i](x));
      h[j] = problem.renormalize_weights ? acc / group_mass[j] : acc;
    }
    return h;
  };
  auto inside_tube = [&](const std::vector<double>& h, std::size_t upto) {
    for (std::size_t k = 0; k <= upto; ++k) {
      if (!(h[k] < problem.tube_radii[k])) return false;
    }
    return true;
  };

  const std::size_t capacity = 10000;
  std::vector<std::vector<double>> seeds;
  for (std::size_t j = 0; j < c; ++j) {
    ESConfig cfg = es;
    cfg.rng_seed = derive_seed(es.rng_seed, 1, j);
    cfg.target_best = problem.tube_radii[j] / 4.0;
    cfg.target_mean = problem.tube_radii[j];
    PointPool pool(capacity);
    auto objective = [&](std::span<const double> x) { return stage_values(x)[j]; };
    auto observer = [&](std::span<const double> x, double, std::size_t) {
      const auto h = stage_values(x);
      if (inside_tube(h, j)) pool.add(h[j], x);
    };
    result.stage_runs.push_back(minimize(objective, problem.dimension, seeds, cfg, observer));
    result.archives.push_back(pool.points());
    if (result.archives.back().empty() && problem.strict_seeding) {
      result.failed_stage = j + 1;
      return result;
    }
    Rng rng(derive_seed(es.rng_seed, 2, j));
    const auto& archive = result.archives.back();
    seeds.clear();
    for (std::size_t idx : sample_indices(archive.size(), cfg.parents, rng)) seeds.push_back(archive[idx]);
  }

  ESConfig cfg = es;
  cfg.rng_seed = derive_seed(es.rng_seed, 3, 0);
  auto penalized = [&](std::span<const double> x) {
    const auto h = stage_values(x);
    double excess = 0.0;
    for (std::size_t k = 0; k < c; ++k) excess += std::max(0.0, h[k] - problem.tube_radii[k]);
    return problem.objective(x) + problem.penalty_factor * excess;
  };
  result.final_run = minimize(penalized, problem.dimension, seeds, cfg);
  result.success = true;
  return result;
}

// ---------------------------------------------------------------------------
// Archive

Archive::Archive(int order, int stages, bool explicit_flag, std::size_t capacity)
    : order_(order), stages_(stages), explicit_(explicit_flag), capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("archive capacity must be positive");
}

bool Archive::insert(ArchiveRecord record) {
  if (stored_.count(record.x) != 0) return false;
  if (records_.size() >= capacity_) {
    if (!(record.fitness < records_.front().fitness)) return false;  // ties lose to the earlier record
    std::pop_heap(records_.begin(), records_.end(), record_ranks_before);
    stored_.erase(records_.back().x);
    records_.pop_back();
  }
  record.sequence = next_sequence_++;
  stored_.insert(record.x);
  records_.push_back(std::move(record));
  std::push_heap(records_.begin(), records_.end(), record_ranks_before);
  return true;
}

std::vector<ArchiveRecord> Archive::sorted() const {
  std::vector<ArchiveRecord> out = records_;
  std::sort(out.begin(), out.end(), record_ranks_before);
  return out;
}

// ---------------------------------------------------------------------------
// Pareto

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dominates: objective vectors differ in length");
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

std::vector<std::size_t> non_dominated(const std::vector<std::vector<double>>& objectives) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < objectives.size() && !dominated; ++j) {
      if (j != i && dominates(objectives[j], objectives[i])) dominated = true;
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

ParetoSet pareto_front(const Archive& archive) {
  ParetoSet set;
  set.order = archive.order();
  if (archive.empty()) return set;
  const int q = archive.order();
  const ConditionSystem system(archive.stages(), q, archive.is_explicit());
  const std::size_t begin = system.first_index(q + 1);
  for (const auto& node : system.trees_of_order(q + 1)) set.tree_encodings.push_back(node.tree.encoding());

  const auto records = archive.sorted();
  std::vector<std::vector<double>> signed_errors;
  std::vector<std::vector<double>> objectives;
  std::vector<double> e(system.trees().size());
  for (const auto& rec : records) {
    system.error_coefficients(rec.x, e);
    std::vector<double> top(e.begin() + static_cast<std::ptrdiff_t>(begin), e.end());
    std::vector<double> mags(top.size());
    std::transform(top.begin(), top.end(), mags.begin(), [](double v) { return std::abs(v); });
    signed_errors.push_back(std::move(top));
    objectives.push_back(std::move(mags));
  }
  for (std::size_t i : non_dominated(objectives)) set.members.push_back({records[i], signed_errors[i]});
  return set;
}

// ---------------------------------------------------------------------------
// Runge-Kutta cycles

double cycle_objective(const ConditionSystem& system, std::span<const double> x, int q, bool penalty,
                       double penalty_factor) {
  std::vector<double> e(system.trees().size());
  system.error_coefficients(x, e);
  if (!penalty) return system.fitness(e);
  // F_q with every order-p metric (p <= q) at or above c_p multiplied by the penalty factor.
  const auto metrics = system.order_metrics(e);
  double weighted = 0.0;
  double total = 0.0;
  for (int p = 1; p <= system.tree_order_limit(); ++p) {
    const double m = metrics[static_cast<std::size_t>(p - 1)];
    const double mass = system.alpha_sum(p);
    const bool outside = p <= q && !(m < system.thresholds().at(p));
    weighted += mass * m * (outside ? penalty_factor : 1.0);
    total += mass;
  }
  return weighted / total;
}

namespace {

void validate(const EvolveConfig& config) {
  if (config.stages < 1) throw std::invalid_argument("evolve: stages must be positive");
  if (config.start_order < 1) throw std::invalid_argument("evolve: start order must be positive");
  if (config.max_order < config.start_order || config.max_order + 2 > kMaxTreeOrder) {
    throw BoundsError("evolve: max order must lie in [start order, " + std::to_string(kMaxTreeOrder - 2) + "]");
  }
  if (!(config.amplification > 0.0) || !(config.base_tolerance > 0.0)) {
    throw std::invalid_argument("evolve: amplification and base tolerance must be positive");
  }
  config.es.validate();
}

ArchiveRecord make_record(const ConditionSystem& system, std::span<const double> x, int order, std::size_t gen,
                          std::uint64_t seed) {
  std::vector<double> e(system.trees().size());
  system.error_coefficients(x, e);
  ArchiveRecord rec;
  rec.order = order;
  rec.x.assign(x.begin(), x.end());
  rec.metrics = system.order_metrics(e);
  rec.fitness = system.fitness(e);
  rec.generation = gen;
  rec.seed = seed;
  return rec;
}

}  // namespace

CycleOutcome run_cycle(const EvolveConfig& config, int q, Archive& current, Archive& next) {
  validate(config);
  const int s = config.stages;
  const bool ex = config.explicit_flag;
  const ConditionSystem system(s, q, ex, Thresholds::defaults(q + 1, config.amplification, config.base_tolerance));
  const ConditionSystem system_next(s, q + 1, ex,
                                    Thresholds::defaults(q + 2, config.amplification, config.base_tolerance));
  const double c_next = system.thresholds().at(q + 1);
  const bool fill_current = current.empty();

  CycleOutcome outcome;
  outcome.q = q;
  outcome.best_fitness = std::numeric_limits<double>::infinity();

  ESConfig es = config.es;
  es.target_best = c_next / 4.0;
  es.target_mean = c_next;

  auto objective = [&](std::span<const double> x) {
    return cycle_objective(system, x, q, config.penalty, config.penalty_factor);
  };

  std::vector<double> e(system.trees().size());
  std::uint64_t run_seed = 0;
  auto observer = [&](std::span<const double> x, double f, std::size_t gen) {
    const bool maybe_next = f < c_next * (1.0 + 1e-12);
    if (!maybe_next && !fill_current) return;
    system.error_coefficients(x, e);
    const auto report = system.feasibility(e, q + 1);
    if (report.feasible) next.insert(make_record(system_next, x, q + 1, gen, run_seed));
    if (fill_current && system.feasibility(e, q).feasible) current.insert(make_record(system, x, q, gen, run_seed));
  };

  for (std::size_t r = 0; r <= config.restarts; ++r) {
    const Archive& source = (r > 0 && !next.empty()) ? next : current;
    std::vector<std::vector<double>> seeds;
    Rng pick(derive_seed(config.seed, static_cast<std::uint64_t>(q), 2 * r + 1));
    if (!source.empty()) {
      const auto records = source.sorted();
      for (std::size_t idx : sample_indices(records.size(), es.parents, pick)) seeds.push_back(records[idx].x);
    }
    run_seed = derive_seed(config.seed, static_cast<std::uint64_t>(q), 2 * r);
    es.rng_seed = run_seed;
    const ESRun run = minimize(objective, system.dimension(), seeds, es, observer);
    outcome.evaluations += run.evaluations;
    ++outcome.runs;
    if (run.best_fitness < outcome.best_fitness) {
      outcome.best_fitness = run.best_fitness;
      outcome.best_x = run.best_x;
    }
    if (config.log) {
      config.log("cycle q=" + std::to_string(q) + " run " + std::to_string(r) + ": best " +
                 std::to_string(run.best_fitness) + ", " + to_string(run.termination) + " after " +
                 std::to_string(run.generations) + " generations, archive(" + std::to_string(q + 1) +
                 ") size " + std::to_string(next.size()));
    }
  }
  outcome.success = !next.empty();
  return outcome;
}

EvolveResult evolve_runge_kutta(const EvolveConfig& config) {
  validate(config);
  EvolveResult result;
  auto archive_for = [&](int order) -> Archive& {
    auto it = result.archives.find(order);
    if (it == result.archives.end()) {
      it = result.archives
               .emplace(order, Archive(order, config.stages, config.explicit_flag, config.archive_capacity))
               .first;
    }
    return it->second;
  };

  int q = config.start_order;
  for (; q <= config.max_order; ++q) {
    Archive& current = archive_for(q);
    Archive& next = archive_for(q + 1);
    result.cycles.push_back(run_cycle(config, q, current, next));
    if (!result.cycles.back().success) break;
  }
  const CycleOutcome& last = result.cycles.back();

  for (const auto& [order, archive] : result.archives) {
    if (!archive.empty()) result.q_max = std::max(result.q_max, order);
  }
  // Drop empty archives so the result lists only orders that were reached.
  std::erase_if(result.archives, [](const auto& kv) { return kv.second.empty(); });

  result.best_x = last.best_x;
  const ConditionSystem system(config.stages, last.q, config.explicit_flag,
                               Thresholds::defaults(last.q + 1, config.amplification, config.base_tolerance));
  std::vector<double> e(system.trees().size());
  system.error_coefficients(result.best_x, e);
  result.best_fitness = system.fitness(e);
  const std::size_t begin = system.first_index(last.q + 1);
  for (const auto& node : system.trees_of_order(last.q + 1)) result.best_error_trees.push_back(node.tree.encoding());
  result.best_errors.assign(e.begin() + static_cast<std::ptrdiff_t>(begin), e.end());

  if (result.q_max > 0) result.pareto = pareto_front(result.archives.at(result.q_max));
  return result;
}

}  // namespace rkevo
