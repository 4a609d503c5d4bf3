#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rkevo/tableau.hpp"

namespace rkevo {

using State = Eigen::VectorXd;
using RightHandSide = std::function<State(const State&)>;

/// Autonomous test problem y' = g(y), y(0) = y0, with closed-form solution.
struct TestProblem {
  std::string name;
  RightHandSide g;
  State y0;
  double t_final = 1.0;
  std::function<State(double)> exact;
};

/**
 * Built-in problems:
 *   exp         y' = y,        y0 = 1, t in [0, 1]
 *   decay       y' = -y,       y0 = 1, t in [0, 2]
 *   logistic    y' = y(1-y),   y0 = 1/2, t in [0, 2]
 *   quadratic   y' = y^2,      y0 = 1, t in [0, 1/2], y = 1/(1-t)
 *   oscillator  (x, v)' = (v, -x), y0 = (1, 0), t in [0, 2]
 * Throws std::invalid_argument for unknown names.
 */
TestProblem make_problem(std::string_view name);
std::vector<std::string> problem_names();

struct ImplicitSolveOptions {
  double tolerance = 1e-14;
  int max_iterations = 200;
};

/// One step y0 -> y1. Implicit tableaux solve the stage equations by damped
/// fixed-point iteration (damping 1, then 0.5 if that fails) and throw
/// NonconvergenceError when neither contracts.
State rk_step(const ButcherTableau& tableau, const RightHandSide& g, const State& y, double h,
              const ImplicitSolveOptions& options = {});

/// `steps` fixed steps of size h.
State integrate(const ButcherTableau& tableau, const RightHandSide& g, const State& y0, double h, int steps);

struct OrderEstimate {
  std::string kind;  // "local" or "global"
  std::vector<double> step_sizes;  // h_k = h_0 / 2^k
  std::vector<double> errors;
  std::vector<bool> used;  // false when the level hit the rounding floor
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual of the log-log fit
};

/// Error of one step from y0 against the exact solution, over `levels` halvings of h0.
/// The slope estimates p+1 for an order-p method.
OrderEstimate local_order(const ButcherTableau& tableau, const TestProblem& problem, double h0, int levels);

/// Error at t_final with n_k = round(t_final / h_0) * 2^k steps. The slope estimates p.
OrderEstimate global_order(const ButcherTableau& tableau, const TestProblem& problem, double h0, int levels);

}  // namespace rkevo
