#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ordgp/gp.hpp"
#include "ordgp/kernel.hpp"
#include "ordgp/random.hpp"

namespace ordgp {

/// In-place rank-one inverse update (K + u v^T)^{-1} given K^{-1}, O(n^2).
/// Returns the denominator 1 + v^T K^{-1} u, which is also the determinant
/// ratio det(K + u v^T) / det(K). Throws SingularUpdate if its magnitude is
/// below 1e-12; `inverse` is left untouched in that case.
double woodbury_update(Eigen::MatrixXd& inverse, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Value-returning form of woodbury_update.
Eigen::MatrixXd woodbury_updated(const Eigen::MatrixXd& inverse, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& v);

struct ChainConfig {
  int iterations = 5000;
  std::optional<Eigen::VectorXd> proposal_scale;  // per coordinate; defaults to sigma_t
  double burn_in_fraction = 0.5;
  int refresh_period = 250;
  std::uint64_t seed = 1;
  bool sample_theta = true;
  std::optional<KernelParams> initial_theta;  // defaults to a marginal-likelihood fit
  std::optional<Eigen::VectorXd> initial_tau;  // defaults to the order-repaired observations
  double theta_proposal_scale = 0.05;
  int max_retained = 10000;
  Eigen::VectorXd queries;  // prediction points (may be empty)

  void validate() const;
};

struct ChainCounters {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t ordering_rejections = 0;
  std::uint64_t theta_proposals = 0;
  std::uint64_t theta_accepted = 0;
  std::uint64_t woodbury_updates = 0;
  std::uint64_t singular_fallbacks = 0;
  std::uint64_t dense_inversions = 0;  // full O(n^3) inverse recomputes
};

/// Single-site Metropolis-Hastings over the ordered latent inputs (and,
/// optionally, the kernel hyperparameters). The inverse covariance is kept
/// current with two Woodbury updates per accepted coordinate move.
/// Works on canonical (descending) data.
class Chain {
 public:
  Chain(const Dataset& canonical, const ChainConfig& config);

  [[nodiscard]] const Eigen::VectorXd& tau() const noexcept { return tau_; }
  [[nodiscard]] const KernelParams& theta() const noexcept { return theta_; }
  [[nodiscard]] const Eigen::MatrixXd& cov() const noexcept { return cov_; }
  [[nodiscard]] const Eigen::MatrixXd& inverse() const noexcept { return inverse_; }
  [[nodiscard]] double log_post() const noexcept { return log_lik_y_ + log_lik_t_; }
  [[nodiscard]] const ChainCounters& counters() const noexcept { return counters_; }

  /// One MH update of coordinate i. Returns true if the proposal was accepted.
  bool mh_step(int i);

  /// Same as mh_step with a caller-supplied proposal value (testing hook).
  bool mh_step_to(int i, double proposal, double log_uniform);

  /// One lognormal random-walk MH update of theta component c (0: sf, 1: d).
  bool theta_step(int component);

  /// All coordinates in order, then each theta component when enabled.
  void sweep();

  /// max |K^{-1} K - I|.
  [[nodiscard]] double inverse_drift() const;

  /// Recompute the inverse and log-determinant from a fresh factorization.
  void refresh();

 private:
  void rebuild();

  const Dataset& data_;
  ChainConfig config_;
  Eigen::VectorXd scale_;
  ThetaBounds box_;
  Rng rng_;
  Eigen::VectorXd tau_;
  KernelParams theta_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd inverse_;
  double log_det_ = 0.0;
  double log_lik_y_ = 0.0;
  double log_lik_t_ = 0.0;
  ChainCounters counters_;
};

struct ChainSummary {
  Eigen::VectorXd tau_mean;  // canonical (descending) order
  Eigen::VectorXd tau_sd;
  bool reversed = false;
  std::vector<KernelParams> theta_samples;
  std::vector<GaussianPrediction> predictions;  // at config.queries
  double acceptance_rate = 0.0;                 // tau proposals that passed the order check or not
  double theta_acceptance_rate = 0.0;
  ChainCounters counters;
  double max_drift_before_refresh = 0.0;
  int retained = 0;

  [[nodiscard]] Eigen::VectorXd tau_mean_input_order() const {
    return reversed ? Eigen::VectorXd(tau_mean.reverse()) : tau_mean;
  }
};

/// Runs config.iterations sweeps, drops the burn-in and summarizes the
/// retained samples (uniformly subsampled to at most max_retained).
ChainSummary run_chain(const Dataset& data, const ChainConfig& config);

/// Predictive mean/variance at `queries` averaged over (tau, theta) samples:
/// the moments of the equally weighted mixture of per-sample predictions.
/// Samples are processed in parallel and reduced in order.
std::vector<GaussianPrediction> mixture_predictions(const Dataset& canonical,
                                                    const std::vector<Eigen::VectorXd>& taus,
                                                    const std::vector<KernelParams>& thetas,
                                                    const Eigen::VectorXd& queries);

}  // namespace ordgp
