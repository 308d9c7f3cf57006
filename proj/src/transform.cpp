#include "ordgp/transform.hpp"

#include <cmath>

#include "ordgp/error.hpp"

namespace ordgp {

LatentInput::LatentInput(Eigen::VectorXd tau) : tau_(std::move(tau)) {
  if (tau_.size() < 1) {
    throw Error(ErrorCode::EmptyDataset, "latent input needs at least one location");
  }
  if (!tau_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "latent input must be finite");
  }
  for (Eigen::Index i = 0; i + 1 < tau_.size(); ++i) {
    if (!(tau_(i) > tau_(i + 1))) {
      throw Error(ErrorCode::NonDecreasingInput,
                  "latent input not strictly decreasing at index " + std::to_string(i));
    }
  }
}

TransformedLatent to_latent(const LatentInput& tau) {
  const auto n = tau.size();
  TransformedLatent out;
  out.r = tau(n - 1);
  out.l.resize(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    out.l(i) = std::log(tau(i) - tau(i + 1));
  }
  return out;
}

Eigen::VectorXd tau_positions(const TransformedLatent& x) {
  const auto gaps = x.l.size();
  Eigen::VectorXd tau(gaps + 1);
  tau(gaps) = x.r;
  for (Eigen::Index i = gaps - 1; i >= 0; --i) {
    const double g = std::exp(x.l(i));
    if (!std::isfinite(g)) {
      throw Error(ErrorCode::Overflow, "exp(l) overflowed at index " + std::to_string(i));
    }
    tau(i) = tau(i + 1) + g;
  }
  return tau;
}

LatentInput from_latent(const TransformedLatent& x) { return LatentInput(tau_positions(x)); }

TransformedLatent split_coordinates(const Eigen::VectorXd& coords) {
  const auto n = coords.size();
  return TransformedLatent{coords.head(n - 1), coords(n - 1)};
}

LatentInput expected_tau(const MixtureQ& q) {
  const int n = q.dim();
  const int components = q.components();
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < components; ++k) {
    const auto& m = q.mean(k);
    const auto& v = q.var(k);
    double acc = m(n - 1);
    tau(n - 1) += acc;
    for (int i = n - 2; i >= 0; --i) {
      const double g = std::exp(m(i) + 0.5 * v(i));
      if (!std::isfinite(g)) {
        throw Error(ErrorCode::Overflow, "lognormal moment overflowed");
      }
      acc += g;
      tau(i) += acc;
    }
  }
  tau /= static_cast<double>(components);
  return LatentInput(std::move(tau));
}

LatentInput repair_order(const Eigen::VectorXd& observed, double min_gap) {
  if (!(min_gap > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "min_gap must be positive");
  }
  const auto n = observed.size();
  Eigen::VectorXd tau(n);
  tau(n - 1) = observed(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    const double gap = observed(i) - observed(i + 1);
    tau(i) = tau(i + 1) + (gap > 0.0 ? gap : min_gap);
  }
  return LatentInput(std::move(tau));
}

}  // namespace ordgp
