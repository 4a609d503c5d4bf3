#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rkevo {

/**
 * Evolution-strategy settings.
 *
 * Defaults follow the published parameter table: lambda = 1000, mu = 500,
 * one hundred thousand generations. A target of 0 never triggers because the
 * comparisons are strict.
 */
struct ESConfig {
  std::size_t population = 1000;  // lambda
  std::size_t parents = 500;       // mu
  std::size_t max_iterations = 100000;
  double target_best = 0.0;  // stop when the best point this run sampled (seeds excluded) is < target_best
  double target_mean = 0.0;  // stop when population mean < target_mean
  double initial_step = 1.0;
  std::uint64_t rng_seed = 0;

  // false gives a plain (mu+lambda)-ES with isotropic, fixed-shape mutation
  // and cumulative step-size control only.
  bool adapt_covariance = true;

  // 0 disables the stagnation stop.
  std::size_t stagnation_generations = 500;
  double stagnation_tolerance = 1e-18;

  // Objective evaluations per generation run on this many threads; 0 = hardware.
  unsigned threads = 1;

  void validate() const;
};

enum class Termination { target_hit, budget, stagnation };

std::string to_string(Termination t);

struct GenerationStats {
  std::size_t generation = 0;
  double best = 0.0;  // best-ever
  double mean = 0.0;  // over the selected population
  double stddev = 0.0;
  double step_size = 0.0;
};

struct ESRun {
  std::vector<double> best_x;
  double best_fitness = 0.0;
  std::vector<GenerationStats> history;  // entry 0 is the initial population
  std::size_t evaluations = 0;
  std::size_t generations = 0;
  Termination termination = Termination::budget;
};

using Objective = std::function<double(std::span<const double>)>;

// Called once per evaluated candidate, sequentially and in a deterministic
// order, even when evaluations run in parallel.
using EvaluationObserver = std::function<void(std::span<const double> x, double fitness, std::size_t generation)>;

/**
 * Minimize `objective` over R^dim with a CMA-style (mu+lambda) strategy.
 *
 * The initial population holds every seed followed by random points
 * initial_step * N(0, I) until it has lambda members. Each generation samples
 * lambda offspring around the weighted mean of the mu best, keeps the best
 * lambda of parents and offspring, and adapts step size and covariance from
 * the selected points. Non-finite objective values rank as +infinity.
 *
 * Throws DimensionError when a seed length differs from dim.
 */
ESRun minimize(const Objective& objective, std::size_t dim, const std::vector<std::vector<double>>& seeds,
               const ESConfig& config, const EvaluationObserver& observer = {});

/// Thread count from RK_EVOLVE_THREADS (unset = 1, 0 = hardware concurrency).
unsigned threads_from_environment();

}  // namespace rkevo
