#include "ordgp/harness/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ordgp/error.hpp"
#include "ordgp/random.hpp"

namespace ordgp::harness {

double synth_function(int function_id, double x) {
  switch (function_id) {
    case 1: return 5.0 * std::sin(x);
    case 2: return 1.147 * std::exp(-0.2 * x) * std::sin(x);
    case 3: return 0.97 * std::tan(0.15 * x) * std::sin(x);
    case 4: return 0.055 * x * x * std::tanh(std::cos(x));
    case 5: return 1.76 * std::log(x * x * (std::sin(2.0 * x) + 1.0) + 1.0);
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "function id must be in 1..5");
}

Eigen::VectorXd synth_function(int function_id, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out(i) = synth_function(function_id, x(i));
  }
  return out;
}

void SyntheticSpec::validate(bool allow_zero_noise) const {
  if (function_id < 1 || function_id > 5) {
    throw Error(ErrorCode::InvalidArgument, "function id must be in 1..5");
  }
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument, "synthetic data needs n >= 2");
  }
  if (!(upper > lower)) {
    throw Error(ErrorCode::InvalidArgument, "input range is empty");
  }
  if (sigma_y < 0.0 || sigma_t < 0.0 || (!allow_zero_noise && !(sigma_t > 0.0))) {
    throw Error(ErrorCode::InvalidArgument, "noise levels must be sigma_t > 0 and sigma_y >= 0");
  }
}

SyntheticData generate_dataset(const SyntheticSpec& spec, bool allow_zero_noise) {
  spec.validate(allow_zero_noise);
  const int n = spec.n;
  Eigen::VectorXd tau(n);
  const double gap = (spec.upper - spec.lower) / (n - 1);
  for (int i = 0; i < n; ++i) {
    tau(i) = spec.upper - gap * i;
  }
  tau(n - 1) = spec.lower;

  Rng rng(spec.seed);
  Dataset data;
  data.y = synth_function(spec.function_id, tau);
  data.t = tau;
  for (int i = 0; i < n; ++i) {
    data.y(i) += spec.sigma_y * standard_normal(rng);
  }
  for (int i = 0; i < n; ++i) {
    data.t(i) += spec.sigma_t * standard_normal(rng);
  }
  data.sigma_t = Eigen::VectorXd::Constant(n, std::max(spec.sigma_t, 1e-12));
  data.sigma_y = Eigen::VectorXd::Constant(n, spec.sigma_y);
  return SyntheticData{std::move(data), LatentInput(std::move(tau))};
}

double large_noise_sigma_y(int function_id, double lower, double upper) {
  constexpr int kPoints = 10001;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < kPoints; ++i) {
    const double x = lower + (upper - lower) * i / (kPoints - 1);
    const double f = synth_function(function_id, x);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  return (hi - lo) / 10.0;
}

Eigen::VectorXd query_grid(double lower, double upper, int points) {
  const double margin = (upper - lower) / 200.0;
  return Eigen::VectorXd::LinSpaced(points, lower + margin, upper - margin);
}

}  // namespace ordgp::harness
