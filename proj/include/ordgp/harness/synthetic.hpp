#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "ordgp/gp.hpp"
#include "ordgp/transform.hpp"

namespace ordgp::harness {

/// The five benchmark curves, ids 1..5:
///   f1 = 5 sin(x)                      f2 = 1.147 exp(-0.2 x) sin(x)
///   f3 = 0.97 tan(0.15 x) sin(x)       f4 = 0.055 x^2 tanh(cos(x))
///   f5 = 1.76 log(x^2 (sin(2x) + 1) + 1)
double synth_function(int function_id, double x);
Eigen::VectorXd synth_function(int function_id, const Eigen::VectorXd& x);

struct SyntheticSpec {
  int function_id = 1;
  int n = 25;
  double lower = -10.0;
  double upper = 10.0;
  double sigma_y = 0.05;
  double sigma_t = 1.0;
  std::uint64_t seed = 1;

  void validate(bool allow_zero_noise = false) const;
};

struct SyntheticData {
  Dataset data;      // descending latent order
  LatentInput truth; // noise-free inputs
};

/// tau: n equally spaced points from upper down to lower; y = f(tau) + N(0, sigma_y^2),
/// t = tau + N(0, sigma_t^2). Zero noise levels are allowed for testing and
/// then give t = tau, y = f(tau) exactly (the stored sigma_t is floored at 1e-12).
SyntheticData generate_dataset(const SyntheticSpec& spec, bool allow_zero_noise = false);

/// sigma_y used by the large-output-noise preset: (max f - min f) / 10 over a
/// dense grid on [lower, upper].
double large_noise_sigma_y(int function_id, double lower, double upper);

/// 201 equally spaced query points on [lower + g, upper - g], g = (upper - lower) / 200.
Eigen::VectorXd query_grid(double lower, double upper, int points = 201);

}  // namespace ordgp::harness
