#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

namespace ordgp {

/// Hyperparameters of a one-dimensional stationary kernel.
///
/// `sigma_f` is the signal standard deviation (output units) and `length` the
/// length-scale (input units). Both must be strictly positive and finite.
class KernelParams {
 public:
  KernelParams(double sigma_f, double length);

  [[nodiscard]] double sigma_f() const noexcept { return sigma_f_; }
  [[nodiscard]] double length() const noexcept { return length_; }
  [[nodiscard]] double variance() const noexcept { return sigma_f_ * sigma_f_; }

  friend bool operator==(const KernelParams&, const KernelParams&) = default;

 private:
  double sigma_f_;
  double length_;
};

/// Matern nu = 3/2 covariance: sf^2 (1 + sqrt(3) h / d) exp(-sqrt(3) h / d), h = |a - b|.
double matern32(double a, double b, const KernelParams& params);

/// d/da of matern32(a, b). Smooth in the lag; zero at a == b.
double matern32_d1(double a, double b, const KernelParams& params);

/// d^2/da^2 of matern32(a, b). Continuous at zero lag with value -3 sf^2 / d^2.
double matern32_d2(double a, double b, const KernelParams& params);

/// Covariance k(a, b) = k(a + c, b + c) with analytic derivatives in the first
/// location. Derivatives with respect to the second location follow from
/// shift invariance: dk/db = -d1(a, b), d^2k/db^2 = d2(a, b),
/// d^2k/da db = -d2(a, b).
class StationaryKernel {
 public:
  virtual ~StationaryKernel() = default;

  [[nodiscard]] virtual double value(double a, double b) const = 0;
  [[nodiscard]] virtual double d1(double a, double b) const = 0;
  [[nodiscard]] virtual double d2(double a, double b) const = 0;
  [[nodiscard]] virtual const KernelParams& params() const = 0;

  // d1 and d2 at the same pair; kernels may share work between the two.
  virtual void d1_d2(double a, double b, double& first, double& second) const {
    first = d1(a, b);
    second = d2(a, b);
  }

  // Mixed second derivative d^2k / da db.
  [[nodiscard]] double d12(double a, double b) const { return -d2(a, b); }
};

class Matern32Kernel final : public StationaryKernel {
 public:
  explicit Matern32Kernel(KernelParams params) : params_(params) {}

  [[nodiscard]] double value(double a, double b) const override { return matern32(a, b, params_); }
  [[nodiscard]] double d1(double a, double b) const override { return matern32_d1(a, b, params_); }
  [[nodiscard]] double d2(double a, double b) const override { return matern32_d2(a, b, params_); }
  [[nodiscard]] const KernelParams& params() const override { return params_; }
  void d1_d2(double a, double b, double& first, double& second) const override;

 private:
  KernelParams params_;
};

/// Wraps another kernel and counts derivative evaluations. Used to check the
/// asymptotic cost of the derivative recursions.
class CountingKernel final : public StationaryKernel {
 public:
  explicit CountingKernel(const StationaryKernel& inner) : inner_(inner) {}

  [[nodiscard]] double value(double a, double b) const override {
    value_calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.value(a, b);
  }
  [[nodiscard]] double d1(double a, double b) const override {
    d1_calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.d1(a, b);
  }
  [[nodiscard]] double d2(double a, double b) const override {
    d2_calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.d2(a, b);
  }
  [[nodiscard]] const KernelParams& params() const override { return inner_.params(); }

  [[nodiscard]] std::uint64_t value_calls() const { return value_calls_.load(); }
  [[nodiscard]] std::uint64_t d1_calls() const { return d1_calls_.load(); }
  [[nodiscard]] std::uint64_t d2_calls() const { return d2_calls_.load(); }
  void reset() {
    value_calls_ = 0;
    d1_calls_ = 0;
    d2_calls_ = 0;
  }

 private:
  const StationaryKernel& inner_;
  mutable std::atomic<std::uint64_t> value_calls_{0};
  mutable std::atomic<std::uint64_t> d1_calls_{0};
  mutable std::atomic<std::uint64_t> d2_calls_{0};
};

}  // namespace ordgp
