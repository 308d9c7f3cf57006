#include "ordgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ordgp/error.hpp"
#include "ordgp/optimize.hpp"
#include "ordgp/random.hpp"

namespace ordgp {

void Dataset::validate() const {
  const auto n = t.size();
  if (sigma_t.size() != n || y.size() != n || sigma_y.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "t, sigma_t, y and sigma_y must have equal length");
  }
  if (n < 1) {
    throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
  }
  if (!t.allFinite() || !sigma_t.allFinite() || !y.allFinite() || !sigma_y.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "dataset contains non-finite values");
  }
  if ((sigma_t.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "sigma_t must be > 0");
  }
  if ((sigma_y.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "sigma_y must be >= 0");
  }
}

CanonicalDataset canonicalize(const Dataset& data) {
  data.validate();
  CanonicalDataset out{data, false};
  if (data.size() > 1 && data.t(0) < data.t(data.size() - 1)) {
    out.reversed = true;
    out.data.t = data.t.reverse();
    out.data.sigma_t = data.sigma_t.reverse();
    out.data.y = data.y.reverse();
    out.data.sigma_y = data.sigma_y.reverse();
  }
  return out;
}

Eigen::MatrixXd covariance_matrix(const Eigen::VectorXd& tau, const Eigen::VectorXd& sigma_y,
                                  const StationaryKernel& kernel) {
  const auto n = tau.size();
  Eigen::MatrixXd cov(n, n);
  // Small matrices are cheaper than the cost of a parallel region.
#pragma omp parallel for schedule(static) if (n >= 128)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      cov(i, j) = kernel.value(tau(i), tau(j));
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      cov(i, j) = cov(j, i);
    }
    cov(j, j) += sigma_y(j) * sigma_y(j);
  }
  return cov;
}

Eigen::MatrixXd covariance_matrix_serial(const Eigen::VectorXd& tau, const Eigen::VectorXd& sigma_y,
                                         const StationaryKernel& kernel) {
  const auto n = tau.size();
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cov(i, j) = kernel.value(tau(i), tau(j)) + (i == j ? sigma_y(i) * sigma_y(i) : 0.0);
    }
  }
  return cov;
}

Eigen::MatrixXd GPWorkspace::inverse() const {
  const auto n = size();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  const auto lower = chol.triangularView<Eigen::Lower>();
  lower.solveInPlace(inv);
  lower.transpose().solveInPlace(inv);
  return inv;
}

Eigen::VectorXd GPWorkspace::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd out = chol.triangularView<Eigen::Lower>().solve(rhs);
  chol.triangularView<Eigen::Lower>().transpose().solveInPlace(out);
  return out;
}

GPWorkspace factorize(Eigen::MatrixXd cov, const Eigen::VectorXd& y, double signal_variance) {
  constexpr double kLadder[] = {0.0, 1e-10, 1e-8, 1e-6};
  const auto n = cov.rows();
  for (const double rung : kLadder) {
    const double jitter = rung * signal_variance;
    Eigen::MatrixXd trial = cov;
    trial.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(trial);
    if (llt.info() != Eigen::Success) {
      continue;
    }
    Eigen::MatrixXd lower = llt.matrixL();
    if (!lower.allFinite() || (lower.diagonal().array() <= 0.0).any()) {
      continue;
    }
    GPWorkspace ws;
    ws.cov = std::move(trial);
    ws.chol = std::move(lower);
    ws.jitter = jitter;
    ws.log_det = 2.0 * ws.chol.diagonal().array().log().sum();
    ws.gamma = ws.solve(y);
    return ws;
  }
  throw Error(ErrorCode::NotPositiveDefinite,
              "covariance of size " + std::to_string(n) + " not positive definite after jitter");
}

GPWorkspace build_workspace(const Eigen::VectorXd& tau, const Dataset& data,
                            const StationaryKernel& kernel) {
  if (tau.size() != data.size()) {
    throw Error(ErrorCode::LengthMismatch, "tau and dataset lengths differ");
  }
  return factorize(covariance_matrix(tau, data.sigma_y, kernel), data.y, kernel.params().variance());
}

GPWorkspace build_workspace(const Eigen::VectorXd& tau, const Dataset& data, const KernelParams& params) {
  return build_workspace(tau, data, Matern32Kernel(params));
}

double log_marginal(const GPWorkspace& ws, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(ws.gamma) - 0.5 * ws.log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

GaussianPrediction predict(double tau_star, const Eigen::VectorXd& tau, const GPWorkspace& ws,
                           const StationaryKernel& kernel) {
  const auto n = tau.size();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k_star(i) = kernel.value(tau(i), tau_star);
  }
  GaussianPrediction out;
  out.mean = k_star.dot(ws.gamma);
  const Eigen::VectorXd half = ws.chol.triangularView<Eigen::Lower>().solve(k_star);
  out.var = std::max(0.0, kernel.value(tau_star, tau_star) - half.squaredNorm());
  return out;
}

std::vector<GaussianPrediction> predict_many(const Eigen::VectorXd& queries, const Eigen::VectorXd& tau,
                                             const GPWorkspace& ws, const StationaryKernel& kernel) {
  std::vector<GaussianPrediction> out(static_cast<std::size_t>(queries.size()));
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < queries.size(); ++q) {
    out[static_cast<std::size_t>(q)] = predict(queries(q), tau, ws, kernel);
  }
  return out;
}

double sym_kl(const GaussianPrediction& p, const GaussianPrediction& q) {
  if (!(p.var > 0.0) || !(q.var > 0.0)) {
    throw Error(ErrorCode::DegenerateVariance, "symmetrized KL needs strictly positive variances");
  }
  const double d2 = (p.mean - q.mean) * (p.mean - q.mean);
  // The log-variance terms cancel in the sum of both directions.
  const double kl_pq = 0.5 * (p.var / q.var + d2 / q.var - 1.0 + std::log(q.var / p.var));
  const double kl_qp = 0.5 * (q.var / p.var + d2 / p.var - 1.0 + std::log(p.var / q.var));
  return 0.5 * (kl_pq + kl_qp);
}

bool ThetaBounds::contains(const Eigen::Vector2d& log_theta) const {
  return (log_theta.array() >= lower.array()).all() && (log_theta.array() <= upper.array()).all();
}

Eigen::Vector2d ThetaBounds::clamp(const Eigen::Vector2d& log_theta) const {
  return log_theta.cwiseMax(lower).cwiseMin(upper);
}

ThetaBounds theta_bounds(const Dataset& data) {
  const double n = static_cast<double>(data.size());
  double sd = 0.0;
  if (data.size() > 1) {
    const double mean = data.y.mean();
    sd = std::sqrt((data.y.array() - mean).square().sum() / (n - 1.0));
  }
  double range = data.t.maxCoeff() - data.t.minCoeff();
  if (!(sd > 0.0)) sd = 1.0;
  if (!(range > 0.0)) range = 1.0;
  ThetaBounds b;
  b.lower << std::log(1e-3 * sd), std::log(1e-3 * range);
  b.upper << std::log(1e3 * sd), std::log(10.0 * range);
  return b;
}

KernelParams params_from_log(const Eigen::Vector2d& log_theta) {
  return KernelParams(std::exp(log_theta(0)), std::exp(log_theta(1)));
}

Eigen::Vector2d log_of(const KernelParams& params) {
  return {std::log(params.sigma_f()), std::log(params.length())};
}

KernelParams maximize_marginal_theta(const Dataset& data, const Eigen::VectorXd& tau, const ThetaBounds& box,
                                     int iterations) {
  auto negative = [&](const Eigen::VectorXd& log_theta) {
    return -log_marginal(build_workspace(tau, data, params_from_log(log_theta)), data.y);
  };
  const Eigen::Vector2d start(0.5 * (box.lower(0) + box.upper(0)), box.lower(1) + std::log(1e2));
  BoxSearchOptions options;
  options.max_iterations = iterations;
  return params_from_log(minimize_in_box(negative, box.clamp(start), box.lower, box.upper, options).x);
}

GPFitResult fit_standard_gp(const Dataset& data, const GPFitConfig& config) {
  data.validate();
  const ThetaBounds box = theta_bounds(data);
  const Eigen::VectorXd& tau = data.t;

  auto negative_marginal = [&](const Eigen::VectorXd& log_theta) {
    const GPWorkspace ws = build_workspace(tau, data, params_from_log(log_theta));
    return -log_marginal(ws, data.y);
  };

  Rng rng(config.seed);
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best = box.clamp(Eigen::Vector2d::Zero());
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    Eigen::Vector2d start;
    if (r == 0) {
      // sf ~ sd(y), d ~ range / 10
      start << 0.5 * (box.lower(0) + box.upper(0)), box.lower(1) + std::log(1e2);
    } else {
      for (int k = 0; k < 2; ++k) {
        start(k) = box.lower(k) + uniform01(rng) * (box.upper(k) - box.lower(k));
      }
    }
    start = box.clamp(start);
    BoxSearchOptions options;
    options.max_iterations = config.max_iterations;
    const BoxSearchResult res = minimize_in_box(negative_marginal, start, box.lower, box.upper, options);
    if (std::isfinite(res.value) && res.value < best_value) {
      best_value = res.value;
      best = res.x;
    }
  }
  if (!std::isfinite(best_value)) {
    throw Error(ErrorCode::OptimizationFailed, "no restart produced a finite log marginal");
  }
  return GPFitResult{params_from_log(best), tau, -best_value};
}

}  // namespace ordgp
