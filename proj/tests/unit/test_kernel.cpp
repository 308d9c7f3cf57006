#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "ordgp/error.hpp"
#include "ordgp/kernel.hpp"

using namespace ordgp;

TEST_CASE("kernel params reject non-positive values") {
  CHECK_THROWS_AS(KernelParams(0.0, 1.0), Error);
  CHECK_THROWS_AS(KernelParams(1.0, -2.0), Error);
  CHECK_THROWS_AS(KernelParams(1.0, std::nan("")), Error);
  try {
    KernelParams(1.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("matern32 frozen values") {
  const KernelParams unit(1.0, 1.0);
  CHECK(matern32(0.7, 0.7, KernelParams(2.5, 0.3)) == doctest::Approx(6.25).epsilon(1e-15));
  // sqrt(3) h / d = 1 gives 2 / e.
  CHECK(matern32(1.0 / std::numbers::sqrt3, 0.0, unit) == doctest::Approx(2.0 / std::numbers::e).epsilon(1e-14));
  CHECK(matern32(1.0 / std::numbers::sqrt3, 0.0, unit) == doctest::Approx(0.735759).epsilon(1e-6));
  CHECK(matern32(1e6 * 0.4, 0.0, KernelParams(3.0, 0.4)) < 1e-3 * 9.0);
}

TEST_CASE("matern32 derivative limits at zero lag") {
  CHECK(matern32_d1(1.3, 1.3, KernelParams(2.0, 0.5)) == 0.0);
  CHECK(matern32_d2(0.0, 0.0, KernelParams(1.0, 1.0)) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(matern32_d2(4.0, 4.0, KernelParams(2.0, 0.5)) == doctest::Approx(-3.0 * 4.0 / 0.25).epsilon(1e-15));
  // d2 is continuous at zero lag.
  const KernelParams p(1.2, 0.8);
  CHECK(matern32_d2(1e-9, 0.0, p) == doctest::Approx(matern32_d2(0.0, 0.0, p)).epsilon(1e-7));
}

TEST_CASE("matern32 symmetry, shift identities and finite differences at random points") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const KernelParams p(0.2 + 3.0 * uniform01(rng), 0.1 + 4.0 * uniform01(rng));
    const double a = -5.0 + 10.0 * uniform01(rng);
    const double b = -5.0 + 10.0 * uniform01(rng);
    CHECK(matern32(a, b, p) == matern32(b, a, p));
    CHECK(matern32(a, b, p) > 0.0);
    CHECK(matern32(a, b, p) <= p.variance());

    // d/db k(a, b) by finite differences equals -d1(a, b).
    const double h = 1e-6 * p.length();
    const double fd_a = (matern32(a + h, b, p) - matern32(a - h, b, p)) / (2.0 * h);
    const double fd_b = (matern32(a, b + h, p) - matern32(a, b - h, p)) / (2.0 * h);
    const double d1 = matern32_d1(a, b, p);
    CHECK(std::abs(fd_a - d1) <= 1e-5 * std::max(std::abs(d1), 1e-3 * p.variance() / p.length()));
    CHECK(std::abs(d1 + fd_b) <= 1e-5 * std::max(std::abs(d1), 1e-3 * p.variance() / p.length()));

    const double fd2 = (matern32_d1(a + h, b, p) - matern32_d1(a - h, b, p)) / (2.0 * h);
    const double d2 = matern32_d2(a, b, p);
    CHECK(std::abs(fd2 - d2) <= 1e-4 * std::max(std::abs(d2), 1e-3 * p.variance() / (p.length() * p.length())));

    // d2/da2 + d2/db2 + 2 d2/dadb = 0.
    const Matern32Kernel k(p);
    CHECK(std::abs(k.d2(a, b) + k.d2(b, a) + 2.0 * k.d12(a, b)) <= 1e-12 * (1.0 + std::abs(d2)));

    double first = 0.0;
    double second = 0.0;
    k.d1_d2(a, b, first, second);
    CHECK(first == doctest::Approx(d1).epsilon(1e-13));
    CHECK(second == doctest::Approx(d2).epsilon(1e-13));
  }
}

TEST_CASE("matern32 Gram matrices are positive semidefinite") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const KernelParams p(0.5 + uniform01(rng), 0.2 + 2.0 * uniform01(rng));
    Eigen::VectorXd x(10);
    for (int i = 0; i < 10; ++i) {
      x(i) = -3.0 + 6.0 * uniform01(rng);
    }
    Eigen::MatrixXd g(10, 10);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        g(i, j) = matern32(x(i), x(j), p);
      }
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().minCoeff();
    CHECK(min_eig >= -1e-10 * p.variance());
  }
}

TEST_CASE("counting kernel forwards and counts") {
  const Matern32Kernel inner(KernelParams(1.0, 1.0));
  CountingKernel k(inner);
  CHECK(k.value(0.1, 0.4) == inner.value(0.1, 0.4));
  (void)k.d1(0.0, 1.0);
  (void)k.d1(0.0, 2.0);
  (void)k.d2(0.0, 1.0);
  double a = 0.0;
  double b = 0.0;
  k.d1_d2(0.3, 0.1, a, b);
  CHECK(k.value_calls() == 1);
  CHECK(k.d1_calls() == 3);
  CHECK(k.d2_calls() == 2);
  k.reset();
  CHECK(k.d1_calls() == 0);
}
