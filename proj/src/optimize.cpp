#include "ordgp/optimize.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>

#include "ordgp/error.hpp"

namespace ordgp {

namespace {

constexpr double kHuge = 1e300;

struct BoxProblem {
  const std::function<double(const Eigen::VectorXd&)>* objective;
  const Eigen::VectorXd* lower;
  const Eigen::VectorXd* upper;
};

double box_trampoline(const gsl_vector* v, void* params) {
  const auto* problem = static_cast<const BoxProblem*>(params);
  const auto n = problem->lower->size();
  Eigen::VectorXd x(n);
  double penalty = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = gsl_vector_get(v, static_cast<size_t>(i));
    const double clamped = std::clamp(raw, (*problem->lower)(i), (*problem->upper)(i));
    penalty += (raw - clamped) * (raw - clamped);
    x(i) = clamped;
  }
  double value = kHuge;
  try {
    value = (*problem->objective)(x);
  } catch (const Error&) {
    value = kHuge;
  }
  if (!std::isfinite(value)) {
    value = kHuge;
  }
  return value + 1e3 * penalty * (1.0 + std::abs(value));
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace

BoxSearchResult minimize_in_box(const std::function<double(const Eigen::VectorXd&)>& objective,
                                const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, const BoxSearchOptions& options) {
  const auto n = static_cast<size_t>(start.size());
  if (lower.size() != start.size() || upper.size() != start.size()) {
    throw Error(ErrorCode::LengthMismatch, "box bounds do not match the start point");
  }
  gsl_set_error_handler_off();

  BoxProblem problem{&objective, &lower, &upper};
  gsl_multimin_function fn{&box_trampoline, n, &problem};

  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(n));
  for (size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    gsl_vector_set(x.get(), i, std::clamp(start(idx), lower(idx), upper(idx)));
    const double width = upper(idx) - lower(idx);
    gsl_vector_set(step.get(), i, std::min(options.initial_step, 0.25 * width > 0 ? 0.25 * width : 1.0));
  }

  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), step.get());

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) {
      break;
    }
    const double size = gsl_multimin_fminimizer_size(solver.get());
    if (gsl_multimin_test_size(size, options.size_tolerance) == GSL_SUCCESS) {
      break;
    }
  }

  BoxSearchResult result;
  result.x.resize(start.size());
  const gsl_vector* best = gsl_multimin_fminimizer_x(solver.get());
  for (size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    result.x(idx) = std::clamp(gsl_vector_get(best, i), lower(idx), upper(idx));
  }
  try {
    result.value = objective(result.x);
  } catch (const Error&) {
    result.value = std::numeric_limits<double>::infinity();
  }
  result.iterations = iter;
  return result;
}

DescentResult minimize_descent(const ValueAndGradient& fg, Eigen::VectorXd start,
                               const DescentOptions& options) {
  DescentResult result;
  Eigen::VectorXd x = std::move(start);
  Eigen::VectorXd g;
  double f = fg(x, &g);
  if (!std::isfinite(f)) {
    throw Error(ErrorCode::OptimizationFailed, "objective is not finite at the starting point");
  }
  result.trace.push_back(f);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
  double gradient_step = 1.0;  // last accepted step along a plain gradient direction
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;

    // Two-loop recursion for the quasi-Newton direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
      const auto& [s, yv] = pairs[k];
      alpha[k] = s.dot(q) / yv.dot(s);
      q -= alpha[k] * yv;
    }
    if (!pairs.empty()) {
      const auto& [s, yv] = pairs.back();
      q *= s.dot(yv) / yv.squaredNorm();
    } else {
      const double gn = g.norm();
      if (gn > 0.0) {
        q *= std::min(1.0, 1.0 / gn);
      }
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [s, yv] = pairs[k];
      const double beta = yv.dot(q) / yv.dot(s);
      q += (alpha[k] - beta) * s;
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      pairs.clear();
      const double gn = g.norm();
      dir = -g * (gn > 0.0 ? std::min(1.0, 1.0 / gn) : 1.0);
      slope = g.dot(dir);
      if (!(slope < 0.0)) {
        break;
      }
    }
    const bool quasi_newton = !pairs.empty();

    // Trial points are evaluated with their gradient: for the objectives used
    // here the gradient costs little beyond the value. Backtracking uses the
    // minimizer of the quadratic through f, the slope and the failed trial,
    // kept within [0.1, 0.5] of the previous step.
    double step = quasi_newton ? 1.0 : std::min(1.0, 2.0 * gradient_step);
    const int budget = quasi_newton ? std::min(options.max_backtracks, 3) : options.max_backtracks;
    bool accepted = false;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new;
    double f_new = f;
    for (int bt = 0; bt < budget; ++bt) {
      x_new = x + step * dir;
      f_new = fg(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + options.armijo * step * slope && f_new < f &&
          g_new.size() == x.size() && g_new.allFinite()) {
        accepted = true;
        break;
      }
      double next = 0.5 * step;
      if (std::isfinite(f_new)) {
        const double curvature = f_new - f - slope * step;
        if (curvature > 0.0) {
          next = std::clamp(-slope * step * step / (2.0 * curvature), 0.1 * step, 0.5 * step);
        }
      }
      step = next;
    }
    if (!accepted) {
      // A failed quasi-Newton direction usually means stale curvature pairs:
      // retry along the plain gradient before giving up.
      if (quasi_newton) {
        pairs.clear();
        continue;
      }
      result.stalled = true;
      break;
    }
    if (!quasi_newton) {
      gradient_step = step;
    }

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      pairs.emplace_back(std::move(s), std::move(yv));
      if (static_cast<int>(pairs.size()) > options.history) {
        pairs.pop_front();
      }
    }
    const double change = std::abs(f - f_new) / std::max(1.0, std::abs(f));
    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    result.trace.push_back(f);
    if (change < options.relative_tolerance) {
      break;
    }
  }
  result.x = std::move(x);
  result.value = f;
  return result;
}

}  // namespace ordgp
