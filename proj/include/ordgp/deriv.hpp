#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "ordgp/gp.hpp"
#include "ordgp/kernel.hpp"
#include "ordgp/transform.hpp"

namespace ordgp {

/// Derivatives of log Pr(y | l, theta) with respect to the log-gaps l.
///
/// The covariance depends on l only through tau(h) = r + sum_{j >= h} exp(l_j),
/// so d tau_h / d l_i = exp(l_i) for h <= i and 0 otherwise. Writing
///
///   S(i) = sum_{h <= i} dK/d tau_h      D(i) = sum_{h, h' <= i} d^2K / d tau_h d tau_h'
///
/// gives dK/dl_i = exp(l_i) S(i) and d^2K/dl_i^2 = dK/dl_i + exp(2 l_i) D(i).
/// Both running matrices change only in row/column i when i advances: S picks
/// up the d1 row of tau_i, and D gains d2(tau_i, tau_k) for k > i while the
/// entries (j, i), j < i, cancel to zero by shift invariance. A full sweep
/// therefore needs O(n^2) kernel-derivative evaluations.
///
/// With W = K^{-1}, gamma = W y, T = gamma gamma^T - W, P = dK/dl_i:
///
///   grad_i = 1/2 tr(T P)
///   hess_i = 1/2 [ tr(T d^2K/dl_i^2) - 2 (P gamma)^T W (P gamma) + tr(P W P W) ]
///
/// tr(T S) and tr(T D) are updated in O(n) per step; S gamma in O(n) and
/// U = W S in O(n^2), so the Hessian diagonal costs O(n^3) overall and never
/// forms dM_i/dl_i densely.
class DerivWorkspace {
 public:
  /// Called once per step i with the assembled dK/dl_i and d^2K/dl_i^2. Only
  /// used for verification; setting it forces dense materialization.
  using StepObserver = std::function<void(int i, const Eigen::MatrixXd& dK, const Eigen::MatrixXd& d2K)>;

  DerivWorkspace(const TransformedLatent& x, const Dataset& data, const StationaryKernel& kernel);

  [[nodiscard]] const GPWorkspace& gp() const noexcept { return gp_; }
  [[nodiscard]] const Eigen::VectorXd& tau() const noexcept { return tau_; }
  [[nodiscard]] const Eigen::MatrixXd& inverse() const noexcept { return inverse_; }
  [[nodiscard]] const Eigen::MatrixXd& T() const noexcept { return t_matrix_; }
  [[nodiscard]] double log_lik() const noexcept { return log_lik_; }

  /// Running matrices after the most recent sweep (state at the last step).
  [[nodiscard]] const Eigen::MatrixXd& dK_running() const noexcept { return s_; }
  [[nodiscard]] const Eigen::MatrixXd& d2K_running() const noexcept { return d_; }

  struct Result {
    Eigen::VectorXd grad;
    Eigen::VectorXd hess_diag;  // empty unless requested
  };

  /// One forward sweep over i = 0..n-2.
  Result sweep(bool with_hessian, const StepObserver& observer = {});

  Eigen::VectorXd grad_loglik_l() { return sweep(false).grad; }
  Eigen::VectorXd hess_diag_loglik_l() { return sweep(true).hess_diag; }

 private:
  const StationaryKernel& kernel_;
  Eigen::VectorXd l_;
  Eigen::VectorXd tau_;
  GPWorkspace gp_;
  Eigen::MatrixXd inverse_;
  Eigen::MatrixXd t_matrix_;
  double log_lik_ = 0.0;
  Eigen::MatrixXd s_;
  Eigen::MatrixXd d_;
};

/// Convenience wrappers building a workspace at x.
Eigen::VectorXd grad_loglik_l(const TransformedLatent& x, const Dataset& data, const StationaryKernel& kernel);
Eigen::VectorXd hess_diag_loglik_l(const TransformedLatent& x, const Dataset& data,
                                   const StationaryKernel& kernel);

namespace reference {

/// Entry-by-entry dK/dl_i from the full chain-rule sum over h <= i.
Eigen::MatrixXd dK_dl(const Eigen::VectorXd& tau, const Eigen::VectorXd& l, int i,
                      const StationaryKernel& kernel);

/// Entry-by-entry d^2K/dl_i^2 from the full double sum over h, h' <= i, with
/// no use of shift invariance.
Eigen::MatrixXd d2K_dl2(const Eigen::VectorXd& tau, const Eigen::VectorXd& l, int i,
                        const StationaryKernel& kernel);

/// Gradient and Hessian diagonal using the naive matrices and dense traces
/// (O(n^3) kernel-derivative evaluations, O(n^4) arithmetic).
DerivWorkspace::Result derivatives(const TransformedLatent& x, const Dataset& data,
                                   const StationaryKernel& kernel);

}  // namespace reference

struct KernelEvalReport {
  int n = 0;
  std::uint64_t recursion_d1 = 0;
  std::uint64_t recursion_d2 = 0;
  std::uint64_t naive_d1 = 0;
  std::uint64_t naive_d2 = 0;

  [[nodiscard]] std::uint64_t recursion_total() const { return recursion_d1 + recursion_d2; }
  [[nodiscard]] std::uint64_t naive_total() const { return naive_d1 + naive_d2; }
};

/// Counts kernel-derivative calls for one gradient + Hessian-diagonal
/// evaluation on a random instance of size n, for the recursion and for the
/// naive assembly.
KernelEvalReport count_kernel_evals(int n, std::uint64_t seed = 7);

}  // namespace ordgp
