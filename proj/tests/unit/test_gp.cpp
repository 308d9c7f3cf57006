#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "ordgp/gp.hpp"
#include "ordgp/kernel.hpp"

using namespace ordgp;
using testutil::error_code;

namespace {

Dataset one_point(double y, double sigma_y) {
  Dataset d;
  d.t = Eigen::VectorXd::Constant(1, 0.0);
  d.sigma_t = Eigen::VectorXd::Constant(1, 1.0);
  d.y = Eigen::VectorXd::Constant(1, y);
  d.sigma_y = Eigen::VectorXd::Constant(1, sigma_y);
  return d;
}

// Dense multivariate normal log-density through a full-pivot LU.
double dense_mvn_logpdf(const Eigen::MatrixXd& cov, const Eigen::VectorXd& y) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  const double quad = y.dot(lu.solve(y));
  const double log_det = std::log(lu.determinant());
  return -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("dataset validation errors") {
  Dataset d = testutil::random_dataset(4, 1);
  CHECK_NOTHROW(d.validate());
  Dataset bad = d;
  bad.y.resize(3);
  CHECK(error_code([&] { bad.validate(); }) == ErrorCode::LengthMismatch);
  bad = d;
  bad.sigma_t(1) = 0.0;
  CHECK(error_code([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = d;
  bad.sigma_y(0) = -1.0;
  CHECK(error_code([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = d;
  bad.t(2) = std::nan("");
  CHECK(error_code([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  Dataset empty;
  CHECK(error_code([&] { empty.validate(); }) == ErrorCode::EmptyDataset);
}

TEST_CASE("canonicalize reverses ascending data and restores order") {
  Dataset d = testutil::random_dataset(5, 2);
  Dataset asc = d;
  asc.t = d.t.reverse();
  asc.y = d.y.reverse();
  const CanonicalDataset c = canonicalize(asc);
  CHECK(c.reversed);
  CHECK(c.data.t == d.t);
  CHECK(c.restore(c.data.y) == asc.y);
  CHECK_FALSE(canonicalize(d).reversed);
}

TEST_CASE("workspace scalar examples") {
  const KernelParams unit(1.0, 1.0);
  const Dataset d0 = one_point(0.0, 0.0);
  const GPWorkspace ws0 = build_workspace(d0.t, d0, unit);
  CHECK(ws0.cov(0, 0) == 1.0);
  CHECK(ws0.log_det == doctest::Approx(0.0));
  CHECK(log_marginal(ws0, d0.y) == doctest::Approx(-0.918939).epsilon(1e-6));
  CHECK(log_marginal(ws0, d0.y) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));

  const Dataset d1 = one_point(1.0, 0.0);
  CHECK(log_marginal(build_workspace(d1.t, d1, unit), d1.y) ==
        doctest::Approx(-0.5 - 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));

  const KernelParams p(2.0, 0.7);
  const GPWorkspace ws2 = build_workspace(d0.t, d0, p);
  CHECK(ws2.log_det == doctest::Approx(std::log(4.0)).epsilon(1e-15));

  // n = 1, sigma_y = 0: mean = k(x*, tau_1) / sf^2 * y_1.
  const Dataset d3 = one_point(1.7, 0.0);
  const Matern32Kernel k(p);
  const GaussianPrediction pred = predict(0.4, d3.t, build_workspace(d3.t, d3, k), k);
  CHECK(pred.mean == doctest::Approx(matern32(0.4, 0.0, p) / 4.0 * 1.7).epsilon(1e-14));
}

TEST_CASE("duplicate locations are regularized by output noise") {
  Dataset d;
  d.t = Eigen::Vector2d(1.0, 1.0);
  d.sigma_t = Eigen::Vector2d(1.0, 1.0);
  d.y = Eigen::Vector2d(0.3, -0.1);
  d.sigma_y = Eigen::Vector2d(0.2, 0.5);
  const KernelParams p(1.5, 1.0);
  const GPWorkspace ws = build_workspace(d.t, d, p);
  CHECK(ws.jitter == 0.0);
  CHECK(ws.cov(0, 1) == doctest::Approx(2.25));
  CHECK(ws.cov(0, 0) == doctest::Approx(2.25 + 0.04));
  CHECK(ws.cov(1, 1) == doctest::Approx(2.25 + 0.25));
  CHECK(std::isfinite(ws.log_det));
}

TEST_CASE("exact duplicates without noise fall back on the jitter ladder") {
  Dataset d;
  d.t = Eigen::Vector2d(1.0, 1.0);
  d.sigma_t = Eigen::Vector2d(1.0, 1.0);
  d.y = Eigen::Vector2d(0.3, -0.1);
  d.sigma_y = Eigen::Vector2d(0.0, 0.0);
  const GPWorkspace ws = build_workspace(d.t, d, KernelParams(1.0, 1.0));
  CHECK(ws.jitter > 0.0);
  CHECK(ws.jitter <= 1e-6);
}

TEST_CASE("workspace matches dense oracles on random instances") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = testutil::random_dataset(5 + static_cast<int>(seed), seed);
    const KernelParams p(0.5 + 0.1 * seed, 0.4 + 0.2 * seed);
    const Matern32Kernel k(p);
    const GPWorkspace ws = build_workspace(d.t, d, k);
    CHECK((ws.cov - ws.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ws.chol * ws.chol.transpose() - ws.cov).cwiseAbs().maxCoeff() <= 1e-8 * ws.cov.cwiseAbs().maxCoeff());
    const Eigen::VectorXd dense = ws.cov.fullPivLu().solve(d.y);
    CHECK((ws.gamma - dense).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + dense.cwiseAbs().maxCoeff()));
    CHECK((ws.cov * ws.gamma - d.y).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(log_marginal(ws, d.y) == doctest::Approx(dense_mvn_logpdf(ws.cov, d.y)).epsilon(1e-10));
    CHECK((ws.inverse() * ws.cov - Eigen::MatrixXd::Identity(d.size(), d.size())).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((covariance_matrix(d.t, d.sigma_y, k) - covariance_matrix_serial(d.t, d.sigma_y, k)).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("parallel covariance equals the serial reference at a size that uses threads") {
  const Dataset d = testutil::random_dataset(300, 4);
  const Matern32Kernel k(KernelParams(1.1, 2.0));
  CHECK(covariance_matrix(d.t, d.sigma_y, k) == covariance_matrix_serial(d.t, d.sigma_y, k));
}

TEST_CASE("log marginal is invariant under joint permutation") {
  const Dataset d = testutil::random_dataset(7, 3);
  const KernelParams p(1.0, 1.3);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(7);
  perm.indices() << 3, 0, 6, 1, 5, 2, 4;
  Dataset shuffled = d;
  shuffled.t = perm * d.t;
  shuffled.y = perm * d.y;
  shuffled.sigma_y = perm * d.sigma_y;
  shuffled.sigma_t = perm * d.sigma_t;
  const double a = log_marginal(build_workspace(d.t, d, p), d.y);
  const double b = log_marginal(build_workspace(shuffled.t, shuffled, p), shuffled.y);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("prediction interpolates without noise and reverts far away") {
  Dataset d = testutil::random_dataset(6, 8);
  d.sigma_y.setZero();
  const KernelParams p(1.3, 1.0);
  const Matern32Kernel k(p);
  const GPWorkspace ws = build_workspace(d.t, d, k);
  const GaussianPrediction at = predict(d.t(0), d.t, ws, k);
  CHECK(std::abs(at.mean - d.y(0)) < 1e-6);
  CHECK(at.var < 1e-8);
  CHECK(at.var >= 0.0);

  const GaussianPrediction far = predict(d.t.maxCoeff() + 25.0 * p.length(), d.t, ws, k);
  CHECK(std::abs(far.mean) < 1e-3 * p.variance());
  CHECK(std::abs(far.var - p.variance()) < 1e-3);

  Dataset noisy = d;
  noisy.sigma_y.setConstant(1e3);
  const GaussianPrediction shrunk = predict(d.t(0), d.t, build_workspace(d.t, noisy, k), k);
  CHECK(std::abs(shrunk.mean) < 1e-3);

  const Eigen::VectorXd queries = Eigen::Vector3d(d.t(2), 0.5, -1.0);
  const auto many = predict_many(queries, d.t, ws, k);
  for (int i = 0; i < 3; ++i) {
    const GaussianPrediction one = predict(queries(i), d.t, ws, k);
    CHECK(many[static_cast<std::size_t>(i)].mean == one.mean);
    CHECK(many[static_cast<std::size_t>(i)].var == one.var);
  }
}

TEST_CASE("sym_kl frozen values and properties") {
  CHECK(sym_kl({0.0, 1.0}, {0.0, 1.0}) == 0.0);
  CHECK(sym_kl({0.0, 1.0}, {1.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));
  // 1/2 [1/2 (1/4 + ln 4 - 1) + 1/2 (4 - ln 4 - 1)] = 0.5625
  CHECK(sym_kl({0.0, 1.0}, {0.0, 4.0}) == doctest::Approx(0.5625).epsilon(1e-15));
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const GaussianPrediction p{standard_normal(rng), 0.1 + uniform01(rng)};
    const GaussianPrediction q{standard_normal(rng), 0.1 + uniform01(rng)};
    CHECK(sym_kl(p, q) == doctest::Approx(sym_kl(q, p)).epsilon(1e-14));
    CHECK(sym_kl(p, q) > 0.0);
  }
  CHECK(error_code([] { (void)sym_kl({0.0, 0.0}, {0.0, 1.0}); }) == ErrorCode::DegenerateVariance);
}

TEST_CASE("theta box helpers") {
  const Dataset d = testutil::random_dataset(10, 6);
  const ThetaBounds box = theta_bounds(d);
  CHECK((box.lower.array() < box.upper.array()).all());
  const Eigen::Vector2d outside(box.upper(0) + 1.0, box.lower(1) - 1.0);
  CHECK_FALSE(box.contains(outside));
  CHECK(box.contains(box.clamp(outside)));
  const KernelParams p(2.0, 0.25);
  const KernelParams back = params_from_log(log_of(p));
  CHECK(back.sigma_f() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(back.length() == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("standard GP recovers the hyperparameters of its own draw") {
  const KernelParams truth(1.5, 2.0);
  const int n = 25;
  Dataset d;
  d.t = Eigen::VectorXd::LinSpaced(n, 20.0, 0.0);
  d.sigma_t = Eigen::VectorXd::Constant(n, 1.0);
  d.sigma_y = Eigen::VectorXd::Constant(n, 1e-3);
  const Matern32Kernel k(truth);
  const Eigen::MatrixXd cov = covariance_matrix(d.t, d.sigma_y, k);
  const Eigen::MatrixXd chol = cov.llt().matrixL();
  Rng rng(21);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    z(i) = standard_normal(rng);
  }
  d.y = chol * z;

  GPFitConfig config;
  config.seed = 4;
  const GPFitResult fit = fit_standard_gp(d, config);
  CHECK(std::abs(std::log(fit.params.sigma_f()) - std::log(truth.sigma_f())) < 0.5);
  CHECK(std::abs(std::log(fit.params.length()) - std::log(truth.length())) < 0.5);
  CHECK(fit.tau == d.t);

  const GPFitResult again = fit_standard_gp(d, config);
  CHECK(again.params == fit.params);
  CHECK(again.log_marginal == fit.log_marginal);
}

TEST_CASE("standard GP on constant outputs returns the lower signal bound") {
  Dataset d = testutil::random_dataset(8, 2);
  d.y.setZero();
  const GPFitResult fit = fit_standard_gp(d, {});
  const ThetaBounds box = theta_bounds(d);
  CHECK(std::log(fit.params.sigma_f()) == doctest::Approx(box.lower(0)).epsilon(1e-3));
}
