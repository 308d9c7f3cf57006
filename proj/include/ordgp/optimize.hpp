#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace ordgp {

struct BoxSearchOptions {
  int max_iterations = 400;
  double initial_step = 0.5;
  double size_tolerance = 1e-6;
};

struct BoxSearchResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

/// Derivative-free minimization inside [lower, upper] (Nelder-Mead simplex,
/// GSL nmsimplex2). The simplex sees the objective at the clamped point plus a
/// quadratic penalty on the distance outside the box; the returned point is
/// always inside the box. Non-finite objective values are treated as +huge.
BoxSearchResult minimize_in_box(const std::function<double(const Eigen::VectorXd&)>& objective,
                                const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, const BoxSearchOptions& options = {});

struct DescentOptions {
  int max_iterations = 200;
  int history = 8;
  double relative_tolerance = 1e-9;
  double armijo = 1e-4;
  int max_backtracks = 20;
};

struct DescentResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::vector<double> trace;  // objective after every accepted step, trace[0] is the start
  int iterations = 0;
  bool stalled = false;  // line search failed to find a decrease
};

/// Value and (when `grad` is non-null) a descent gradient at x. A non-finite
/// value marks x as infeasible; the gradient is then ignored.
using ValueAndGradient = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

/// Limited-memory quasi-Newton descent with backtracking (Armijo) line search.
/// The gradient may be approximate: steps are accepted only if the exact
/// objective decreases, and the direction falls back to steepest descent when
/// it is not a descent direction for the supplied gradient.
DescentResult minimize_descent(const ValueAndGradient& fg, Eigen::VectorXd start,
                               const DescentOptions& options = {});

}  // namespace ordgp
