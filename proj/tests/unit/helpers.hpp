#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

#include "ordgp/error.hpp"
#include "ordgp/gp.hpp"
#include "ordgp/random.hpp"

namespace testutil {

// Code of the ordgp::Error thrown by f; any other outcome escapes as an
// unexpected exception and fails the enclosing test.
template <class F>
ordgp::ErrorCode error_code(F&& f) {
  try {
    f();
  } catch (const ordgp::Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an ordgp::Error");
}

// Strictly decreasing locations with gaps in [0.3, 1.3].
inline Eigen::VectorXd random_tau(int n, ordgp::Rng& rng) {
  Eigen::VectorXd tau(n);
  double x = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    tau(i) = x;
    x += 0.3 + ordgp::uniform01(rng);
  }
  return tau;
}

inline ordgp::Dataset random_dataset(int n, std::uint64_t seed) {
  ordgp::Rng rng(seed);
  ordgp::Dataset d;
  d.t = random_tau(n, rng);
  d.sigma_t = Eigen::VectorXd::Constant(n, 0.4);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    d.y(i) = std::sin(d.t(i)) + 0.1 * ordgp::standard_normal(rng);
    d.t(i) += 0.2 * ordgp::standard_normal(rng);
  }
  d.sigma_y = Eigen::VectorXd::Constant(n, 0.1);
  return d;
}

}  // namespace testutil
