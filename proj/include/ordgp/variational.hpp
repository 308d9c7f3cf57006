#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ordgp/gp.hpp"
#include "ordgp/kernel.hpp"
#include "ordgp/mixture.hpp"
#include "ordgp/optimize.hpp"
#include "ordgp/transform.hpp"

namespace ordgp {

/// Lower bound on the entropy of Q obtained by moving the log inside the
/// mixture self-convolution:
///   -(1/K) sum_i log[(1/K) sum_j N(m_i; m_j, diag(v_i + v_j))].
double entropy_lower_bound(const MixtureQ& q, Eigen::VectorXd* grad = nullptr);

/// Intermediates of the expected input log-likelihood for one component.
struct InputLikTerms {
  Eigen::VectorXd prefix_precision;  // S_i = sum_{j <= i} 1 / sigma_t_j^2
  Eigen::VectorXd mean_tau;          // E tau_i
  Eigen::VectorXd var_tau;           // Var tau_i
};

InputLikTerms input_lik_terms(const Eigen::VectorXd& m, const Eigen::VectorXd& v, const Dataset& data);

/// E_Q log prod_i N(t_i | tau_i, sigma_t_i) without the constant
/// -sum log(sqrt(2 pi) sigma_t_i). Exact under Q: within a component the
/// coordinates are independent, so E (tau_i - t_i)^2 = (E tau_i - t_i)^2 + Var tau_i
/// with lognormal moments for every gap. O(n) per component.
double expected_input_loglik(const MixtureQ& q, const Dataset& data, Eigen::VectorXd* grad = nullptr);

/// Second-order expansion of E_Q log Pr(y | l, theta) around each component
/// mean: (1/K) sum_k [log Pr(y | m_k) + 1/2 sum_j H_jj v_kj] over the gap
/// coordinates. The m-gradient holds the Hessian fixed (third derivatives are
/// dropped).
double expected_gp_loglik(const MixtureQ& q, const Dataset& data, const StationaryKernel& kernel,
                          Eigen::VectorXd* grad = nullptr);

struct ObjectiveTerms {
  double entropy = 0.0;
  double input_loglik = 0.0;
  double gp_loglik = 0.0;

  // Minimized: upper bound (up to a constant) on KL[Q || posterior].
  [[nodiscard]] double total() const { return -(entropy + input_loglik + gp_loglik); }
};

/// Evaluates the three terms and, if requested, the gradient of total() in
/// the packed (m, log v) layout of MixtureQ::pack().
ObjectiveTerms objective_terms(const MixtureQ& q, const Dataset& data, const StationaryKernel& kernel,
                               Eigen::VectorXd* grad = nullptr);

double objective(const MixtureQ& q, const Dataset& data, const KernelParams& theta);
Eigen::VectorXd grad_objective_phi(const MixtureQ& q, const Dataset& data, const KernelParams& theta);

struct FitConfig {
  int components = 3;
  int restarts = 5;
  std::uint64_t seed = 1;
  int outer_rounds = 20;
  double outer_tolerance = 1e-6;
  DescentOptions inner{.max_iterations = 60, .history = 8, .relative_tolerance = 1e-8, .max_backtracks = 3};
  int theta_iterations = 60;
  double theta_tolerance = 1e-2;  // simplex size in log theta
  std::optional<KernelParams> fixed_theta;    // skip the theta step when set
  std::optional<KernelParams> initial_theta;  // start of the theta search
};

struct RestartSummary {
  double final_objective = 0.0;
  bool failed = false;
  std::string error;
};

struct FitResult {
  MixtureQ q;
  KernelParams theta;
  LatentInput tau_hat;  // descending; see `reversed`
  bool reversed = false;
  std::vector<double> objective_trace;            // F after every half-step of the best restart
  std::vector<std::vector<double>> inner_traces;  // accepted-step F values per inner optimization
  std::vector<RestartSummary> restarts;
  int best_restart = 0;

  /// tau_hat in the row order of the input dataset.
  [[nodiscard]] Eigen::VectorXd tau_hat_input_order() const {
    return reversed ? Eigen::VectorXd(tau_hat.values().reverse()) : tau_hat.values();
  }
};

/// theta_bounds(data) with the length-scale floor raised to the mean input
/// spacing range(t) / (n - 1). Below that spacing neighbouring outputs
/// decorrelate, the l-Hessian of log Pr(y | l) vanishes, and the second-order
/// GP term stops penalizing mixture variance, so the theta step would drift
/// to a white-noise kernel.
ThetaBounds variational_theta_bounds(const Dataset& data);

/// sf = sd(y), d = range(t) / 10, clamped into `box`.
KernelParams default_initial_theta(const Dataset& data, const ThetaBounds& box);

/// Alternates mixture updates (quasi-Newton descent judged on the exact
/// objective) with a bounded theta search maximizing the expected GP term.
/// Restarts run in parallel with seeds derived from config.seed and the best
/// final objective wins. Throws OptimizationFailed if every restart fails.
FitResult fit(const Dataset& data, const FitConfig& config = {});

/// Mixture used to start restart `restart`: means from the order-repaired
/// observed inputs plus N(0, (0.1 mean sigma_t)^2) noise, variances
/// min(mean sigma_t^2, 1).
MixtureQ initial_mixture(const Dataset& canonical, int components, std::uint64_t seed);

}  // namespace ordgp
