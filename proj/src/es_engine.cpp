#include "rkevo/es_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

#include "rkevo/errors.hpp"
#include "rkevo/random.hpp"

namespace rkevo {

namespace {

constexpr double kMaxCondition = 1e14;

struct Member {
  Eigen::VectorXd x;
  double f;
  std::uint64_t seq;  // insertion order; breaks fitness ties deterministically
};

bool ranks_before(const Member& a, const Member& b) {
  if (a.f != b.f) return a.f < b.f;
  return a.seq < b.seq;
}

double sanitize(double f) { return std::isnan(f) ? std::numeric_limits<double>::infinity() : f; }

void evaluate_all(const Objective& objective, std::vector<Member>& batch, unsigned threads) {
  const std::size_t n = batch.size();
  auto eval_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::VectorXd& x = batch[i].x;
      batch[i].f = sanitize(objective(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))));
    }
  };
  if (threads <= 1 || n < 2 * static_cast<std::size_t>(threads)) {
    eval_range(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(n, t * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    if (begin < end) pool.emplace_back(eval_range, begin, end);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

void ESConfig::validate() const {
  if (population == 0) throw std::invalid_argument("ES: population must be positive");
  if (parents == 0 || parents > population) throw std::invalid_argument("ES: parents must lie in [1, population]");
  if (!(target_best >= 0.0) || !(target_mean >= 0.0)) throw std::invalid_argument("ES: targets must be >= 0");
  if (!(initial_step >= 0.0) || !std::isfinite(initial_step)) throw std::invalid_argument("ES: bad initial step");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::target_hit: return "target_hit";
    case Termination::budget: return "budget";
    case Termination::stagnation: return "stagnation";
  }
  return "unknown";
}

unsigned threads_from_environment() {
  const char* value = std::getenv("RK_EVOLVE_THREADS");
  if (value == nullptr || *value == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(value, &end, 10);
  if (end == value || n < 0) return 1;
  if (n == 0) return std::max(1U, std::thread::hardware_concurrency());
  return static_cast<unsigned>(n);
}

ESRun minimize(const Objective& objective, std::size_t dim, const std::vector<std::vector<double>>& seeds,
               const ESConfig& config, const EvaluationObserver& observer) {
  config.validate();
  if (dim == 0) throw DimensionError("ES: dimension must be positive");
  for (const auto& s : seeds) {
    if (s.size() != dim) throw DimensionError("ES: seed length differs from the problem dimension");
  }

  const auto n = static_cast<Eigen::Index>(dim);
  const double nd = static_cast<double>(dim);
  const std::size_t lambda = config.population;
  const unsigned threads = config.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : config.threads;
  Rng rng(config.rng_seed);
  std::uint64_t seq = 0;

  ESRun run;
  auto observe = [&](const std::vector<Member>& batch, std::size_t generation) {
    if (!observer) return;
    for (const auto& m : batch) {
      observer(std::span<const double>(m.x.data(), dim), m.f, generation);
    }
  };

  // Initial population.
  std::vector<Member> pop;
  pop.reserve(std::max(lambda, seeds.size()) + lambda);
  for (const auto& s : seeds) {
    pop.push_back({Eigen::Map<const Eigen::VectorXd>(s.data(), n), 0.0, seq++});
  }
  while (pop.size() < lambda) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = config.initial_step * rng.normal();
    pop.push_back({std::move(x), 0.0, seq++});
  }
  evaluate_all(objective, pop, threads);
  run.evaluations = pop.size();
  observe(pop, 0);
  std::sort(pop.begin(), pop.end(), ranks_before);
  if (pop.size() > lambda) pop.resize(lambda);

  // Recombination weights (log-linear) over the mu best.
  const std::size_t mu = std::min(config.parents, pop.size());
  Eigen::VectorXd weights(static_cast<Eigen::Index>(mu));
  for (std::size_t i = 0; i < mu; ++i) {
    weights(static_cast<Eigen::Index>(i)) = std::log(static_cast<double>(mu) + 0.5) - std::log(static_cast<double>(i + 1));
  }
  weights /= weights.sum();
  const double mu_eff = 1.0 / weights.squaredNorm();

  const double cs = (mu_eff + 2.0) / (nd + mu_eff + 5.0);
  const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (nd + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mu_eff / nd) / (nd + 4.0 + 2.0 * mu_eff / nd);
  const double c1 = config.adapt_covariance ? 2.0 / ((nd + 1.3) * (nd + 1.3) + mu_eff) : 0.0;
  const double cmu = config.adapt_covariance
                         ? std::min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nd + 2.0) * (nd + 2.0) + mu_eff))
                         : 0.0;
  const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  auto weighted_mean = [&](const std::vector<Member>& sorted) {
    // Offsets from the best member, so identical parents give back exactly that point.
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 1; i < mu; ++i) shift += weights(static_cast<Eigen::Index>(i)) * (sorted[i].x - sorted[0].x);
    return Eigen::VectorXd(sorted[0].x + shift);
  };

  Eigen::VectorXd mean = weighted_mean(pop);
  double sigma = config.initial_step;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);  // sqrt of eigenvalues
  Eigen::VectorXd pc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ps = Eigen::VectorXd::Zero(n);

  run.best_x.assign(pop.front().x.data(), pop.front().x.data() + n);
  run.best_fitness = pop.front().f;
  double last_improvement_value = run.best_fitness;
  std::size_t since_improvement = 0;

  auto record = [&](std::size_t generation) {
    GenerationStats st;
    st.generation = generation;
    st.best = run.best_fitness;
    double sum = 0.0;
    for (const auto& m : pop) sum += m.f;
    st.mean = sum / static_cast<double>(pop.size());
    double var = 0.0;
    for (const auto& m : pop) var += (m.f - st.mean) * (m.f - st.mean);
    st.stddev = pop.size() > 1 ? std::sqrt(var / static_cast<double>(pop.size() - 1)) : 0.0;
    st.step_size = sigma;
    run.history.push_back(st);
    return st;
  };

  // Seeds do not count toward target_best, so a restart from feasible points still searches.
  double sampled_best = std::numeric_limits<double>::infinity();
  auto note_sampled = [&](const std::vector<Member>& batch, std::uint64_t first_seq) {
    for (const auto& m : batch) {
      if (m.seq >= first_seq) sampled_best = std::min(sampled_best, m.f);
    }
  };
  note_sampled(pop, seeds.size());
  auto target_reached = [&](const GenerationStats& st) {
    return sampled_best < config.target_best || st.mean < config.target_mean;
  };

  if (target_reached(record(0))) {
    run.termination = Termination::target_hit;
    return run;
  }

  std::vector<Member> offspring(lambda);
  for (std::size_t gen = 1; gen <= config.max_iterations; ++gen) {
    if (config.adapt_covariance) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
      Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
      const double top = ev.maxCoeff();
      if (!(top > 0.0) || !std::isfinite(top)) {
        cov.setIdentity();
        basis.setIdentity();
        scale.setOnes();
      } else {
        const double floor_value = top / kMaxCondition;
        if (ev.minCoeff() < floor_value) {
          const double shift = floor_value - ev.minCoeff();
          ev.array() += shift;
          cov.diagonal().array() += shift;
        }
        basis = eig.eigenvectors();
        scale = ev.cwiseSqrt();
      }
    }

    for (std::size_t k = 0; k < lambda; ++k) {
      Eigen::VectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
      offspring[k].x = mean + sigma * (basis * scale.cwiseProduct(z));
      offspring[k].seq = seq++;
    }
    evaluate_all(objective, offspring, threads);
    run.evaluations += lambda;
    observe(offspring, gen);
    note_sampled(offspring, 0);

    // The strategy state moves with this generation's ranked offspring. Recombining the plus-selected
    // elite instead stalls once it straddles a curved valley, and survivors were not drawn from
    // N(mean, sigma^2 C), so their steps would corrupt the covariance.
    std::sort(offspring.begin(), offspring.end(), ranks_before);
    const Eigen::VectorXd new_mean = weighted_mean(offspring);

    // Plus-selection: the population keeps the best lambda of parents and offspring.
    pop.insert(pop.end(), offspring.begin(), offspring.end());
    std::sort(pop.begin(), pop.end(), ranks_before);
    pop.resize(lambda);

    if (pop.front().f < run.best_fitness) {
      run.best_fitness = pop.front().f;
      run.best_x.assign(pop.front().x.data(), pop.front().x.data() + n);
    }

    if (sigma > 0.0) {
      const Eigen::VectorXd y_w = (new_mean - mean) / sigma;
      const Eigen::VectorXd z_w = basis * (basis.transpose() * y_w).cwiseQuotient(scale);
      ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mu_eff) * z_w;
      const double ps_norm = ps.norm();
      const double decay = 1.0 - std::pow(1.0 - cs, 2.0 * static_cast<double>(gen));
      const bool hsig = ps_norm / std::sqrt(decay) / chi_n < 1.4 + 2.0 / (nd + 1.0);
      if (config.adapt_covariance) {
        pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mu_eff) : 0.0) * y_w;
        Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t i = 0; i < mu; ++i) {
          const Eigen::VectorXd yi = (offspring[i].x - mean) / sigma;
          rank_mu.noalias() += weights(static_cast<Eigen::Index>(i)) * yi * yi.transpose();
        }
        cov = (1.0 - c1 - cmu) * cov + c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * cov) +
              cmu * rank_mu;
        cov = 0.5 * (cov + cov.transpose());
      }
      sigma *= std::exp((cs / ds) * (ps_norm / chi_n - 1.0));
      if (!std::isfinite(sigma)) sigma = std::numeric_limits<double>::max();
    }
    mean = new_mean;

    run.generations = gen;
    const GenerationStats st = record(gen);
    if (target_reached(st)) {
      run.termination = Termination::target_hit;
      return run;
    }
    if (last_improvement_value - run.best_fitness > config.stagnation_tolerance) {
      last_improvement_value = run.best_fitness;
      since_improvement = 0;
    } else if (config.stagnation_generations > 0 && ++since_improvement >= config.stagnation_generations) {
      run.termination = Termination::stagnation;
      return run;
    }
  }
  run.termination = Termination::budget;
  return run;
}

}  // namespace rkevo
