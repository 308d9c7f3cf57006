#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ordgp {

/// Equally weighted mixture of K diagonal Gaussians over the unconstrained
/// coordinates (l_1, ..., l_{n-1}, r). Coordinate n-1 of every component is r.
class MixtureQ {
 public:
  MixtureQ(std::vector<Eigen::VectorXd> means, std::vector<Eigen::VectorXd> variances);

  [[nodiscard]] int components() const noexcept { return static_cast<int>(means_.size()); }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(means_.front().size()); }

  [[nodiscard]] const Eigen::VectorXd& mean(int k) const { return means_[k]; }
  [[nodiscard]] const Eigen::VectorXd& var(int k) const { return vars_[k]; }
  [[nodiscard]] const std::vector<Eigen::VectorXd>& means() const noexcept { return means_; }
  [[nodiscard]] const std::vector<Eigen::VectorXd>& variances() const noexcept { return vars_; }

  // Flattened parameter vector [m_0, log v_0, m_1, log v_1, ...]; this is the
  // space the optimizer works in.
  [[nodiscard]] Eigen::VectorXd pack() const;
  static MixtureQ unpack(const Eigen::VectorXd& packed, int components, int dim);

 private:
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::VectorXd> vars_;
};

}  // namespace ordgp
