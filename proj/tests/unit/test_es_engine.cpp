#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "rkevo/errors.hpp"
#include "rkevo/es_engine.hpp"
#include "rkevo/order_conditions.hpp"

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * (x[i + 1] - x[i] * x[i]) * (x[i + 1] - x[i] * x[i]) + (1.0 - x[i]) * (1.0 - x[i]);
  }
  return s;
}

rkevo::ESConfig small_config(std::uint64_t seed) {
  rkevo::ESConfig c;
  c.population = 40;
  c.parents = 20;
  c.max_iterations = 2000;
  c.rng_seed = seed;
  return c;
}

}  // namespace

TEST_CASE("sphere converges to the target") {
  auto cfg = small_config(1);
  cfg.target_best = 1e-12;
  const auto run = rkevo::minimize(sphere, 6, {}, cfg);
  CHECK(run.termination == rkevo::Termination::target_hit);
  CHECK(run.best_fitness < 1e-12);
  CHECK(sphere(run.best_x) == run.best_fitness);
}

TEST_CASE("plain (mu+lambda) mode still solves the sphere") {
  auto cfg = small_config(2);
  cfg.adapt_covariance = false;
  cfg.target_best = 1e-10;
  const auto run = rkevo::minimize(sphere, 4, {}, cfg);
  CHECK(run.termination == rkevo::Termination::target_hit);
}

TEST_CASE("6-d Rosenbrock at default settings") {
  rkevo::ESConfig cfg;
  cfg.rng_seed = 7;
  cfg.target_best = 1e-6;
  const auto run = rkevo::minimize(rosenbrock, 6, {}, cfg);
  CHECK(run.best_fitness < 1e-6);
  CHECK(run.termination == rkevo::Termination::target_hit);
}

TEST_CASE("best fitness is monotone and the budget is respected") {
  auto cfg = small_config(3);
  cfg.max_iterations = 150;
  const std::vector<std::vector<double>> seeds{{0.5, 0.5, 0.5}, {1.0, -1.0, 2.0}};
  const auto run = rkevo::minimize(rosenbrock, 3, seeds, cfg);
  CHECK(run.evaluations <= cfg.population * (run.generations + 1) + seeds.size());
  REQUIRE(run.history.size() == run.generations + 1);
  for (std::size_t i = 1; i < run.history.size(); ++i) CHECK(run.history[i].best <= run.history[i - 1].best);
  CHECK(run.termination == rkevo::Termination::budget);
  CHECK(run.generations == 150);
}

TEST_CASE("seeded optimum is never lost") {
  auto cfg = small_config(4);
  cfg.max_iterations = 50;
  const std::vector<std::vector<double>> seeds{{1.0, 1.0, 1.0, 1.0}};
  const auto run = rkevo::minimize(rosenbrock, 4, seeds, cfg);
  CHECK(run.best_fitness <= rosenbrock(seeds[0]));
  CHECK(run.best_fitness == 0.0);
}

TEST_CASE("fixed seed reproduces the run bit for bit, with or without threads") {
  auto cfg = small_config(5);
  cfg.max_iterations = 200;
  const auto a = rkevo::minimize(rosenbrock, 5, {}, cfg);
  const auto b = rkevo::minimize(rosenbrock, 5, {}, cfg);
  cfg.threads = 4;
  const auto c = rkevo::minimize(rosenbrock, 5, {}, cfg);
  CHECK(a.best_x == b.best_x);
  CHECK(a.best_x == c.best_x);
  CHECK(a.best_fitness == c.best_fitness);
  CHECK(a.evaluations == c.evaluations);
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].mean == c.history[i].mean);
}

TEST_CASE("observer sees every evaluation in order") {
  auto cfg = small_config(6);
  cfg.max_iterations = 10;
  cfg.threads = 3;
  std::size_t count = 0;
  std::size_t last_gen = 0;
  bool ordered = true;
  const auto run = rkevo::minimize(sphere, 3, {}, cfg, [&](std::span<const double> x, double f, std::size_t gen) {
    ++count;
    if (gen < last_gen) ordered = false;
    last_gen = gen;
    if (sphere(x) != f) ordered = false;
  });
  CHECK(count == run.evaluations);
  CHECK(ordered);
}

TEST_CASE("zero step size keeps the population fixed") {
  auto cfg = small_config(8);
  cfg.initial_step = 0.0;
  cfg.max_iterations = 20;
  const std::vector<std::vector<double>> seeds(cfg.population, std::vector<double>{0.3, -0.2});
  const auto run = rkevo::minimize(rosenbrock, 2, seeds, cfg);
  for (const auto& st : run.history) {
    CHECK(st.best == rosenbrock(seeds[0]));
    CHECK(st.mean == doctest::Approx(rosenbrock(seeds[0])).epsilon(1e-14));
    CHECK(st.stddev < 1e-14);
  }
}

TEST_CASE("mu equal to lambda is accepted") {
  auto cfg = small_config(9);
  cfg.parents = cfg.population;
  cfg.target_best = 1e-8;
  const auto run = rkevo::minimize(sphere, 3, {}, cfg);
  CHECK(run.best_fitness < 1e-8);
}

TEST_CASE("stagnation stops a dead run") {
  auto cfg = small_config(10);
  cfg.stagnation_generations = 30;
  const auto run = rkevo::minimize([](std::span<const double>) { return 1.0; }, 3, {}, cfg);
  CHECK(run.termination == rkevo::Termination::stagnation);
  CHECK(run.generations == 30);
}

TEST_CASE("argument validation") {
  auto cfg = small_config(11);
  CHECK_THROWS_AS((void)rkevo::minimize(sphere, 3, {{1.0, 2.0}}, cfg), rkevo::DimensionError);
  cfg.parents = cfg.population + 1;
  CHECK_THROWS_AS((void)rkevo::minimize(sphere, 3, {}, cfg), std::invalid_argument);
}

TEST_CASE("order-2 fitness for explicit 3-stage methods reaches the order-3 tube") {
  const rkevo::ConditionSystem sys(3, 2, true);
  rkevo::ESConfig cfg;
  cfg.population = 200;
  cfg.parents = 100;
  cfg.max_iterations = 20000;
  cfg.rng_seed = 21;
  cfg.target_best = sys.thresholds().at(3) / 4.0;
  const auto run = rkevo::minimize([&](std::span<const double> x) { return sys.fitness_of(x); }, sys.dimension(), {}, cfg);
  CHECK(run.best_fitness < sys.thresholds().at(3));
  CHECK(run.generations < cfg.max_iterations);
}
