#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ordgp/deriv.hpp"
#include "ordgp/oracle/oracles.hpp"

using namespace ordgp;

namespace {

struct Instance {
  Dataset data;
  TransformedLatent x;
  KernelParams theta{1.0, 1.0};
};

Instance random_instance(int n, std::uint64_t seed) {
  Rng rng(seed);
  Instance inst;
  inst.data = testutil::random_dataset(n, seed + 100);
  inst.x.l.resize(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    inst.x.l(i) = std::log(0.2 + uniform01(rng));
  }
  inst.x.r = standard_normal(rng);
  inst.theta = KernelParams(0.5 + uniform01(rng), 0.5 + 1.5 * uniform01(rng));
  return inst;
}

}  // namespace

TEST_CASE("gradient and Hessian diagonal against finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Instance inst = random_instance(8, seed);
    const Matern32Kernel k(inst.theta);
    auto loglik = [&](const Eigen::VectorXd& l) { return oracle::loglik_at(l, inst.x.r, inst.data, inst.theta); };
    const Eigen::VectorXd grad = grad_loglik_l(inst.x, inst.data, k);
    CHECK(oracle::relative_error(grad, oracle::fd_gradient(loglik, inst.x.l, 1e-5)) < 1e-5);

    // Central differences of the analytic gradient, one coordinate at a time.
    const Eigen::VectorXd hess = hess_diag_loglik_l(inst.x, inst.data, k);
    Eigen::VectorXd fd(inst.x.l.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < inst.x.l.size(); ++i) {
      TransformedLatent plus = inst.x;
      TransformedLatent minus = inst.x;
      plus.l(i) += h;
      minus.l(i) -= h;
      fd(i) = (grad_loglik_l(plus, inst.data, k)(i) - grad_loglik_l(minus, inst.data, k)(i)) / (2.0 * h);
    }
    CHECK(oracle::relative_error(hess, fd) < 1e-4);
  }
}

TEST_CASE("recursion equals the naive chain-rule assembly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance inst = random_instance(10, seed);
    const Matern32Kernel k(inst.theta);
    DerivWorkspace ws(inst.x, inst.data, k);
    const Eigen::VectorXd tau = tau_positions(inst.x);
    double worst = 0.0;
    const auto result = ws.sweep(true, [&](int i, const Eigen::MatrixXd& dk, const Eigen::MatrixXd& d2k) {
      worst = std::max(worst, (dk - reference::dK_dl(tau, inst.x.l, i, k)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (d2k - reference::d2K_dl2(tau, inst.x.l, i, k)).cwiseAbs().maxCoeff());
      // dK/dl_i vanishes on the blocks where both indices sit on one side of i.
      for (int j = 0; j < dk.rows(); ++j) {
        for (int m = 0; m < dk.cols(); ++m) {
          if ((j <= i) == (m <= i)) {
            CHECK(std::abs(dk(j, m)) < 1e-12);
          }
        }
      }
    });
    CHECK(worst <= 1e-10);
    const auto naive = reference::derivatives(inst.x, inst.data, k);
    CHECK((result.grad - naive.grad).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + naive.grad.cwiseAbs().maxCoeff()));
    CHECK((result.hess_diag - naive.hess_diag).cwiseAbs().maxCoeff() <=
          1e-10 * (1.0 + naive.hess_diag.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("trace of T times the second derivative matches the dense product") {
  const Instance inst = random_instance(9, 42);
  const Matern32Kernel k(inst.theta);
  DerivWorkspace ws(inst.x, inst.data, k);
  const Eigen::MatrixXd t = ws.T();
  CHECK((t - t.transpose()).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + t.cwiseAbs().maxCoeff()));
  const Eigen::VectorXd tau = tau_positions(inst.x);
  (void)ws.sweep(true, [&](int i, const Eigen::MatrixXd& dk, const Eigen::MatrixXd& d2k) {
    const double structured = (t.cwiseProduct(d2k)).sum();
    const double dense = (t * reference::d2K_dl2(tau, inst.x.l, i, k)).trace();
    CHECK(std::abs(structured - dense) <= 1e-10 * (1.0 + std::abs(dense)));
    (void)dk;
  });
}

TEST_CASE("two points: one recursion step equals the naive result exactly") {
  const Instance inst = random_instance(2, 3);
  const Matern32Kernel k(inst.theta);
  DerivWorkspace ws(inst.x, inst.data, k);
  const Eigen::VectorXd tau = tau_positions(inst.x);
  (void)ws.sweep(true, [&](int i, const Eigen::MatrixXd& dk, const Eigen::MatrixXd& d2k) {
    CHECK(dk == reference::dK_dl(tau, inst.x.l, i, k));
    CHECK((d2k - reference::d2K_dl2(tau, inst.x.l, i, k)).cwiseAbs().maxCoeff() <= 1e-15 * d2k.cwiseAbs().maxCoeff());
  });
}

TEST_CASE("a nearly constant kernel has vanishing derivatives") {
  Instance inst = random_instance(6, 5);
  const double range = tau_positions(inst.x).maxCoeff() - tau_positions(inst.x).minCoeff();
  const Matern32Kernel k(KernelParams(1.0, 1e6 * range));
  CHECK(grad_loglik_l(inst.x, inst.data, k).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(hess_diag_loglik_l(inst.x, inst.data, k).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("single observation gives empty derivatives") {
  Dataset d = testutil::random_dataset(1, 1);
  TransformedLatent x{Eigen::VectorXd(0), 0.3};
  const Matern32Kernel k(KernelParams(1.0, 1.0));
  CHECK(grad_loglik_l(x, d, k).size() == 0);
  CHECK(hess_diag_loglik_l(x, d, k).size() == 0);
}

TEST_CASE("kernel-derivative call counts scale quadratically") {
  const KernelEvalReport r10 = count_kernel_evals(10);
  const KernelEvalReport r20 = count_kernel_evals(20);
  CHECK(r10.recursion_total() <= 800);
  CHECK(r10.recursion_total() <= 8 * 10 * 10);
  CHECK(r20.recursion_total() <= 8 * 20 * 20);
  CHECK(r10.naive_total() >= 1000 / 4);
  CHECK(static_cast<double>(r20.recursion_total()) / static_cast<double>(r10.recursion_total()) <= 4.5);
  CHECK(static_cast<double>(r20.naive_total()) / static_cast<double>(r10.naive_total()) >= 6.0);
  CHECK(testutil::error_code([] { (void)count_kernel_evals(1); }) == ErrorCode::InvalidArgument);
}
