#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ordgp/kernel.hpp"
#include "ordgp/transform.hpp"

namespace ordgp {

/// Observed noisy inputs `t` (noise sd `sigma_t`) and outputs `y` (noise sd
/// `sigma_y`). Rows are listed in the known latent order.
struct Dataset {
  Eigen::VectorXd t;
  Eigen::VectorXd sigma_t;
  Eigen::VectorXd y;
  Eigen::VectorXd sigma_y;

  [[nodiscard]] Eigen::Index size() const noexcept { return t.size(); }

  // Throws LengthMismatch / EmptyDataset / InvalidArgument.
  void validate() const;
};

/// A dataset whose rows are arranged so the latent inputs decrease with the
/// row index, together with how to map results back to the caller's order.
struct CanonicalDataset {
  Dataset data;
  bool reversed = false;

  [[nodiscard]] Eigen::VectorXd restore(const Eigen::VectorXd& canonical) const {
    return reversed ? Eigen::VectorXd(canonical.reverse()) : canonical;
  }
};

/// Rows given in ascending latent order (first observed input below the last)
/// are reversed; everything downstream assumes descending order.
CanonicalDataset canonicalize(const Dataset& data);

/// Covariance K_ij = k(tau_i, tau_j) + sigma_y_i^2 [i == j]. Rows are filled
/// in parallel; `covariance_matrix_serial` is the reference loop.
Eigen::MatrixXd covariance_matrix(const Eigen::VectorXd& tau, const Eigen::VectorXd& sigma_y,
                                  const StationaryKernel& kernel);
Eigen::MatrixXd covariance_matrix_serial(const Eigen::VectorXd& tau, const Eigen::VectorXd& sigma_y,
                                         const StationaryKernel& kernel);

/// Factored covariance for one configuration of latent inputs.
struct GPWorkspace {
  Eigen::MatrixXd cov;     // includes any jitter that was needed
  Eigen::MatrixXd chol;    // lower triangular, chol * chol^T == cov
  Eigen::VectorXd gamma;   // cov^{-1} y
  double log_det = 0.0;
  double jitter = 0.0;

  [[nodiscard]] Eigen::Index size() const noexcept { return cov.rows(); }
  [[nodiscard]] Eigen::MatrixXd inverse() const;
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
};

/// Cholesky with the jitter ladder 0, 1e-10, 1e-8, 1e-6 (times sf^2).
/// Throws NotPositiveDefinite when every rung fails.
GPWorkspace factorize(Eigen::MatrixXd cov, const Eigen::VectorXd& y, double signal_variance);

GPWorkspace build_workspace(const Eigen::VectorXd& tau, const Dataset& data,
                            const StationaryKernel& kernel);
GPWorkspace build_workspace(const Eigen::VectorXd& tau, const Dataset& data, const KernelParams& params);

/// -1/2 y^T K^{-1} y - 1/2 log|K| - n/2 log(2 pi).
double log_marginal(const GPWorkspace& ws, const Eigen::VectorXd& y);

struct GaussianPrediction {
  double mean = 0.0;
  double var = 0.0;
};

GaussianPrediction predict(double tau_star, const Eigen::VectorXd& tau, const GPWorkspace& ws,
                           const StationaryKernel& kernel);

/// Predictions at many query points; queries are evaluated in parallel.
std::vector<GaussianPrediction> predict_many(const Eigen::VectorXd& queries, const Eigen::VectorXd& tau,
                                             const GPWorkspace& ws, const StationaryKernel& kernel);

/// Average of KL(p||q) and KL(q||p) for univariate Gaussians.
double sym_kl(const GaussianPrediction& p, const GaussianPrediction& q);

/// Box for (log sf, log d) searches, shared by the GP fit, the variational
/// theta step and the MCMC theta prior.
struct ThetaBounds {
  Eigen::Vector2d lower;
  Eigen::Vector2d upper;

  [[nodiscard]] bool contains(const Eigen::Vector2d& log_theta) const;
  [[nodiscard]] Eigen::Vector2d clamp(const Eigen::Vector2d& log_theta) const;
};

/// log sf in [log(1e-3 sd(y)), log(1e3 sd(y))], log d in [log(1e-3 range(t)), log(10 range(t))].
/// A zero spread falls back to 1.
ThetaBounds theta_bounds(const Dataset& data);

KernelParams params_from_log(const Eigen::Vector2d& log_theta);
Eigen::Vector2d log_of(const KernelParams& params);

/// Single Nelder-Mead search of log_marginal over the theta box at fixed tau,
/// started from sf = geometric box centre, d = 0.1 range(t).
KernelParams maximize_marginal_theta(const Dataset& data, const Eigen::VectorXd& tau, const ThetaBounds& box,
                                     int iterations);

struct GPFitConfig {
  int restarts = 5;
  std::uint64_t seed = 1;
  int max_iterations = 400;
};

struct GPFitResult {
  KernelParams params;
  Eigen::VectorXd tau;  // the observed inputs, used as-is
  double log_marginal = 0.0;
};

/// Standard GP baseline: maximizes log_marginal over theta with tau = t.
/// Throws OptimizationFailed if no restart reaches a finite value.
GPFitResult fit_standard_gp(const Dataset& data, const GPFitConfig& config);

}  // namespace ordgp
