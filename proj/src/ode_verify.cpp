#include "rkevo/ode_verify.hpp"

#include <cmath>
#include <stdexcept>

#include "rkevo/errors.hpp"

namespace rkevo {

namespace {

constexpr double kRoundingFloor = 1e-13;
constexpr std::size_t kMinLevels = 4;
constexpr std::size_t kMinUsedLevels = 3;

State scalar(double v) { return State::Constant(1, v); }

// Stage slopes k_i by sequential substitution (explicit) or fixed-point iteration.
bool solve_stages(const ButcherTableau& t, const RightHandSide& g, const State& y, double h, double damping,
                  const ImplicitSolveOptions& options, std::vector<State>& k) {
  const int s = t.stages();
  const auto& a = t.a();
  for (int i = 0; i < s; ++i) k[static_cast<std::size_t>(i)] = g(y);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double change = 0.0;
    double size = 0.0;
    for (int i = 0; i < s; ++i) {
      State arg = y;
      for (int j = 0; j < s; ++j) {
        if (a(i, j) != 0.0) arg += h * a(i, j) * k[static_cast<std::size_t>(j)];
      }
      State updated = g(arg);
      State& ki = k[static_cast<std::size_t>(i)];
      updated = (1.0 - damping) * ki + damping * updated;
      change = std::max(change, (updated - ki).lpNorm<Eigen::Infinity>());
      size = std::max(size, updated.lpNorm<Eigen::Infinity>());
      ki = std::move(updated);
    }
    if (!std::isfinite(change)) return false;
    if (change <= options.tolerance * std::max(1.0, size)) return true;
  }
  return false;
}

OrderEstimate fit(OrderEstimate est) {
  if (est.step_sizes.size() < kMinLevels) throw std::invalid_argument("order estimate needs at least 4 levels");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < est.step_sizes.size(); ++k) {
    if (!est.used[k]) continue;
    const double lx = std::log(est.step_sizes[k]);
    const double ly = std::log(est.errors[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < kMinUsedLevels) {
    throw std::runtime_error("order estimate: fewer than 3 levels above the rounding floor; increase h0");
  }
  const double nn = static_cast<double>(n);
  est.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  est.intercept = (sy - est.slope * sx) / nn;
  double rss = 0.0;
  for (std::size_t k = 0; k < est.step_sizes.size(); ++k) {
    if (!est.used[k]) continue;
    const double r = std::log(est.errors[k]) - (est.intercept + est.slope * std::log(est.step_sizes[k]));
    rss += r * r;
  }
  est.residual = std::sqrt(rss / nn);
  return est;
}

void check_levels(double h0, int levels) {
  if (!(h0 > 0.0) || !std::isfinite(h0)) throw std::invalid_argument("h0 must be positive");
  if (levels < static_cast<int>(kMinLevels)) throw std::invalid_argument("at least 4 levels are required");
}

}  // namespace

TestProblem make_problem(std::string_view name) {
  TestProblem p;
  p.name = std::string(name);
  if (name == "exp") {
    p.g = [](const State& y) { return State(y); };
    p.y0 = scalar(1.0);
    p.t_final = 1.0;
    p.exact = [](double t) { return scalar(std::exp(t)); };
  } else if (name == "decay") {
    p.g = [](const State& y) { return State(-y); };
    p.y0 = scalar(1.0);
    p.t_final = 2.0;
    p.exact = [](double t) { return scalar(std::exp(-t)); };
  } else if (name == "logistic") {
    p.g = [](const State& y) { return State(y.array() * (1.0 - y.array())); };
    p.y0 = scalar(0.2);  // away from the inflection point y = 1/2, where g'(y0) = 0
    p.t_final = 2.0;
    p.exact = [](double t) { return scalar(1.0 / (1.0 + 4.0 * std::exp(-t))); };
  } else if (name == "quadratic") {
    p.g = [](const State& y) { return State(y.array().square()); };
    p.y0 = scalar(1.0);
    p.t_final = 0.5;
    p.exact = [](double t) { return scalar(1.0 / (1.0 - t)); };
  } else if (name == "oscillator") {
    p.g = [](const State& y) {
      State d(2);
      d << y(1), -y(0);
      return d;
    };
    p.y0 = State(2);
    p.y0 << 1.0, 0.0;
    p.t_final = 2.0;
    p.exact = [](double t) {
      State y(2);
      y << std::cos(t), -std::sin(t);
      return y;
    };
  } else {
    throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
  }
  return p;
}

std::vector<std::string> problem_names() { return {"exp", "decay", "logistic", "quadratic", "oscillator"}; }

State rk_step(const ButcherTableau& tableau, const RightHandSide& g, const State& y, double h,
              const ImplicitSolveOptions& options) {
  const int s = tableau.stages();
  const auto& a = tableau.a();
  std::vector<State> k(static_cast<std::size_t>(s));
  if (tableau.is_explicit()) {
    for (int i = 0; i < s; ++i) {
      State arg = y;
      for (int j = 0; j < i; ++j) {
        if (a(i, j) != 0.0) arg += h * a(i, j) * k[static_cast<std::size_t>(j)];
      }
      k[static_cast<std::size_t>(i)] = g(arg);
    }
  } else if (!solve_stages(tableau, g, y, h, 1.0, options, k) && !solve_stages(tableau, g, y, h, 0.5, options, k)) {
    throw NonconvergenceError("implicit stage iteration did not converge (h = " + std::to_string(h) + ")");
  }
  State y1 = y;
  for (int i = 0; i < s; ++i) {
    const double wi = tableau.w()(i);
    if (wi != 0.0) y1 += h * wi * k[static_cast<std::size_t>(i)];
  }
  return y1;
}

State integrate(const ButcherTableau& tableau, const RightHandSide& g, const State& y0, double h, int steps) {
  State y = y0;
  for (int n = 0; n < steps; ++n) y = rk_step(tableau, g, y, h);
  return y;
}

OrderEstimate local_order(const ButcherTableau& tableau, const TestProblem& problem, double h0, int levels) {
  check_levels(h0, levels);
  OrderEstimate est;
  est.kind = "local";
  double h = h0;
  for (int k = 0; k < levels; ++k, h *= 0.5) {
    const State exact = problem.exact(h);
    const double err = (rk_step(tableau, problem.g, problem.y0, h) - exact).norm();
    est.step_sizes.push_back(h);
    est.errors.push_back(err);
    est.used.push_back(err > kRoundingFloor * exact.norm());
  }
  return fit(std::move(est));
}

OrderEstimate global_order(const ButcherTableau& tableau, const TestProblem& problem, double h0, int levels) {
  check_levels(h0, levels);
  OrderEstimate est;
  est.kind = "global";
  const long base = std::max(1L, std::lround(problem.t_final / h0));
  const State exact = problem.exact(problem.t_final);
  for (int k = 0; k < levels; ++k) {
    const long steps = base << k;
    const double h = problem.t_final / static_cast<double>(steps);
    const double err = (integrate(tableau, problem.g, problem.y0, h, static_cast<int>(steps)) - exact).norm();
    est.step_sizes.push_back(h);
    est.errors.push_back(err);
    est.used.push_back(err > kRoundingFloor * exact.norm());
  }
  return fit(std::move(est));
}

}  // namespace rkevo
