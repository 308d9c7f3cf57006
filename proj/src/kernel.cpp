#include "ordgp/kernel.hpp"

#include <cmath>
#include <numbers>

#include "ordgp/error.hpp"

namespace ordgp {

KernelParams::KernelParams(double sigma_f, double length) : sigma_f_(sigma_f), length_(length) {
  if (!(sigma_f > 0.0) || !(length > 0.0) || !std::isfinite(sigma_f) || !std::isfinite(length)) {
    throw Error(ErrorCode::InvalidArgument, "kernel parameters must be positive and finite");
  }
}

namespace {
constexpr double kSqrt3 = std::numbers::sqrt3;
}

double matern32(double a, double b, const KernelParams& params) {
  const double z = kSqrt3 * std::abs(a - b) / params.length();
  return params.variance() * (1.0 + z) * std::exp(-z);
}

// With c = sqrt(3)/d and h = a - b the derivatives collapse to smooth forms:
//   dk/da     = -sf^2 c^2 h exp(-c|h|)
//   d^2k/da^2 = -sf^2 c^2 (1 - c|h|) exp(-c|h|)
double matern32_d1(double a, double b, const KernelParams& params) {
  const double h = a - b;
  if (h == 0.0) {
    return 0.0;
  }
  const double c = kSqrt3 / params.length();
  return -params.variance() * c * c * h * std::exp(-c * std::abs(h));
}

double matern32_d2(double a, double b, const KernelParams& params) {
  const double c = kSqrt3 / params.length();
  const double z = c * std::abs(a - b);
  return -params.variance() * c * c * (1.0 - z) * std::exp(-z);
}

void Matern32Kernel::d1_d2(double a, double b, double& first, double& second) const {
  const double h = a - b;
  const double c = kSqrt3 / params_.length();
  const double z = c * std::abs(h);
  const double scaled = params_.variance() * c * c * std::exp(-z);
  first = h == 0.0 ? 0.0 : -scaled * h;
  second = -scaled * (1.0 - z);
}

}  // namespace ordgp
