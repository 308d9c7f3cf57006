#pragma once

// Independent reference computations used by the tests and the `oracle`
// command: Monte-Carlo estimates, finite differences and grid quadrature.
// None of these share code paths with the quantities they check beyond the
// basic covariance / log-marginal evaluation.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "ordgp/gp.hpp"
#include "ordgp/kernel.hpp"
#include "ordgp/mixture.hpp"
#include "ordgp/random.hpp"

namespace ordgp::oracle {

struct Estimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean

  [[nodiscard]] bool within(double value, double sigmas) const { return std::abs(value - mean) <= sigmas * se; }
};

/// Draws one coordinate vector from Q (component chosen uniformly).
Eigen::VectorXd sample_mixture(const MixtureQ& q, Rng& rng);

/// log q(x) for the equally weighted diagonal mixture.
double mixture_log_density(const MixtureQ& q, const Eigen::VectorXd& x);

/// E_Q sum_i -(tau_i - t_i)^2 / (2 sigma_t_i^2) by direct sampling.
Estimate mc_expected_input_loglik(const MixtureQ& q, const Dataset& data, int draws, std::uint64_t seed);

/// -E_Q log q(x).
Estimate mc_entropy(const MixtureQ& q, int draws, std::uint64_t seed);

/// E_Q log Pr(y | l, r) with a fresh factorization per draw.
Estimate mc_expected_gp_loglik(const MixtureQ& q, const Dataset& data, const KernelParams& theta, int draws,
                               std::uint64_t seed);

/// log Pr(y | l) at unconstrained coordinates (l, r), from a fresh factorization.
double loglik_at(const Eigen::VectorXd& l, double r, const Dataset& data, const KernelParams& theta);

/// Central-difference gradient with step h.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h);

/// Second differences along each coordinate, Richardson-extrapolated from
/// steps h and h/2.
Eigen::VectorXd fd_hessian_diag(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                double h);

/// Relative error in the max norm: |a - b|_inf / |b|_inf.
double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Posterior mean of (tau_1, tau_2) for a two-point dataset under fixed theta,
/// by midpoint quadrature of Pr(y | tau) N(t | tau, sigma_t) on tau_1 > tau_2
/// over t_i +- 7 sigma_t_i.
Eigen::Vector2d grid_posterior_mean_n2(const Dataset& data, const KernelParams& theta, int cells);

}  // namespace ordgp::oracle
