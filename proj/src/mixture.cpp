#include "ordgp/mixture.hpp"

#include <cmath>

#include "ordgp/error.hpp"

namespace ordgp {

MixtureQ::MixtureQ(std::vector<Eigen::VectorXd> means, std::vector<Eigen::VectorXd> variances)
    : means_(std::move(means)), vars_(std::move(variances)) {
  if (means_.empty() || means_.size() != vars_.size()) {
    throw Error(ErrorCode::InvalidArgument, "mixture needs K >= 1 matching mean/variance vectors");
  }
  const auto n = means_.front().size();
  if (n < 1) {
    throw Error(ErrorCode::InvalidArgument, "mixture dimension must be >= 1");
  }
  for (std::size_t k = 0; k < means_.size(); ++k) {
    if (means_[k].size() != n || vars_[k].size() != n) {
      throw Error(ErrorCode::LengthMismatch, "mixture components have inconsistent dimension");
    }
    if (!means_[k].allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "mixture means must be finite");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(vars_[k](j) > 0.0) || !std::isfinite(vars_[k](j))) {
        throw Error(ErrorCode::InvalidArgument, "mixture variances must be positive and finite");
      }
    }
  }
}

Eigen::VectorXd MixtureQ::pack() const {
  const int n = dim();
  Eigen::VectorXd out(2 * n * components());
  for (int k = 0; k < components(); ++k) {
    out.segment(2 * n * k, n) = means_[k];
    out.segment(2 * n * k + n, n) = vars_[k].array().log().matrix();
  }
  return out;
}

MixtureQ MixtureQ::unpack(const Eigen::VectorXd& packed, int components, int dim) {
  if (packed.size() != 2 * dim * components) {
    throw Error(ErrorCode::LengthMismatch, "packed mixture has wrong length");
  }
  std::vector<Eigen::VectorXd> m(components), v(components);
  for (int k = 0; k < components; ++k) {
    m[k] = packed.segment(2 * dim * k, dim);
    v[k] = packed.segment(2 * dim * k + dim, dim).array().exp().matrix();
  }
  return MixtureQ(std::move(m), std::move(v));
}

}  // namespace ordgp
