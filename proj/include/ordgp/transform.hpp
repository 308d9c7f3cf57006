#pragma once

#include <Eigen/Dense>

#include "ordgp/mixture.hpp"

namespace ordgp {

/// Latent input locations, strictly decreasing: tau(0) > tau(1) > ... > tau(n-1).
class LatentInput {
 public:
  explicit LatentInput(Eigen::VectorXd tau);

  [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return tau_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return tau_.size(); }
  [[nodiscard]] double operator()(Eigen::Index i) const { return tau_(i); }

 private:
  Eigen::VectorXd tau_;
};

/// Unconstrained image of a LatentInput: l(i) = log(tau(i) - tau(i+1)), r = tau(n-1).
struct TransformedLatent {
  Eigen::VectorXd l;
  double r = 0.0;
};

TransformedLatent to_latent(const LatentInput& tau);

/// tau(i) = r + sum_{j >= i} exp(l(j)), accumulated right to left.
LatentInput from_latent(const TransformedLatent& x);

/// Same accumulation as from_latent without the strict-order check. Gaps that
/// underflow relative to tau may tie; covariance code tolerates that.
Eigen::VectorXd tau_positions(const TransformedLatent& x);

/// Splits a packed coordinate vector (l_1..l_{n-1}, r) into its parts.
TransformedLatent split_coordinates(const Eigen::VectorXd& coords);

/// Mixture mean of tau: average over components of r + sum_{j >= i} E exp(l_j),
/// with the lognormal moment E exp(l) = exp(m + v / 2).
LatentInput expected_tau(const MixtureQ& q);

/// Builds an order-valid starting point from observed (possibly misordered)
/// inputs. Gaps that are not strictly positive are replaced by `min_gap`.
LatentInput repair_order(const Eigen::VectorXd& observed, double min_gap);

}  // namespace ordgp
