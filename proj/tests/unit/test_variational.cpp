#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "ordgp/oracle/oracles.hpp"
#include "ordgp/transform.hpp"
#include "ordgp/variational.hpp"

using namespace ordgp;

namespace {

MixtureQ random_mixture(int k, int n, std::uint64_t seed, double v_lo = 0.05, double v_hi = 0.5) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> vars;
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd m(n);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      m(i) = i + 1 < n ? std::log(0.4 + uniform01(rng)) : standard_normal(rng);
      v(i) = v_lo + (v_hi - v_lo) * uniform01(rng);
    }
    means.push_back(m);
    vars.push_back(v);
  }
  return MixtureQ(means, vars);
}

// Plain log-density of t at the point (l, r), without the normalizing constant.
double input_logdensity(const Eigen::VectorXd& coords, const Dataset& data) {
  const Eigen::VectorXd tau = tau_positions(split_coordinates(coords));
  return -0.5 * ((tau - data.t).array().square() / data.sigma_t.array().square()).sum();
}

}  // namespace

TEST_CASE("mixture pack and unpack") {
  const MixtureQ q = random_mixture(3, 4, 1);
  const MixtureQ back = MixtureQ::unpack(q.pack(), 3, 4);
  for (int k = 0; k < 3; ++k) {
    CHECK(back.mean(k) == q.mean(k));
    CHECK((back.var(k) - q.var(k)).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK(testutil::error_code([&] { (void)MixtureQ::unpack(q.pack(), 2, 4); }) == ErrorCode::LengthMismatch);
  CHECK(testutil::error_code([] { MixtureQ({Eigen::Vector2d(0, 0)}, {Eigen::Vector2d(1, 0)}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("entropy bound closed forms") {
  const double v = 0.37;
  const MixtureQ one({Eigen::VectorXd::Constant(1, 0.2)}, {Eigen::VectorXd::Constant(1, v)});
  CHECK(entropy_lower_bound(one) == doctest::Approx(0.5 * std::log(4.0 * std::numbers::pi * v)).epsilon(1e-14));

  const MixtureQ base = random_mixture(1, 4, 3);
  const MixtureQ twice({base.mean(0), base.mean(0)}, {base.var(0), base.var(0)});
  CHECK(entropy_lower_bound(twice) == doctest::Approx(entropy_lower_bound(base)).epsilon(1e-14));
}

TEST_CASE("entropy bound lies below the Monte-Carlo entropy") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const MixtureQ q = random_mixture(3, 4, seed);
    const oracle::Estimate mc = oracle::mc_entropy(q, 200000, seed);
    CHECK(entropy_lower_bound(q) <= mc.mean + 3.0 * mc.se);
  }
}

TEST_CASE("expected input log-likelihood limits and sampling") {
  const Dataset data = testutil::random_dataset(5, 4);
  // Point-mass limit.
  const MixtureQ base = random_mixture(1, 5, 2);
  const MixtureQ point({base.mean(0)}, {Eigen::VectorXd::Constant(5, 1e-14)});
  CHECK(std::abs(expected_input_loglik(point, data) - input_logdensity(base.mean(0), data)) < 1e-6);

  // n = 1: only r.
  Dataset single = testutil::random_dataset(1, 9);
  const MixtureQ r_only({Eigen::VectorXd::Constant(1, 0.8)}, {Eigen::VectorXd::Constant(1, 0.3)});
  const double s2 = single.sigma_t(0) * single.sigma_t(0);
  CHECK(expected_input_loglik(r_only, single) ==
        doctest::Approx(-((0.8 - single.t(0)) * (0.8 - single.t(0)) + 0.3) / (2.0 * s2)).epsilon(1e-14));

  // Monte Carlo, K = 3.
  const MixtureQ q = random_mixture(3, 5, 6);
  const oracle::Estimate mc = oracle::mc_expected_input_loglik(q, data, 200000, 6);
  CHECK(mc.within(expected_input_loglik(q, data), 3.0));
}

TEST_CASE("input likelihood terms") {
  const Dataset data = testutil::random_dataset(6, 2);
  const MixtureQ q = random_mixture(1, 6, 8);
  const InputLikTerms terms = input_lik_terms(q.mean(0), q.var(0), data);
  for (int i = 1; i < 6; ++i) {
    CHECK(terms.prefix_precision(i) >= terms.prefix_precision(i - 1));
  }
  CHECK(terms.mean_tau.allFinite());
  CHECK((terms.var_tau.array() > 0.0).all());
}

TEST_CASE("expected terms are additive over components and invariant under permutation") {
  const Dataset data = testutil::random_dataset(5, 3);
  const Matern32Kernel k(KernelParams(1.0, 1.2));
  const MixtureQ q = random_mixture(3, 5, 11);
  double input_sum = 0.0;
  double gp_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const MixtureQ single({q.mean(c)}, {q.var(c)});
    input_sum += expected_input_loglik(single, data);
    gp_sum += expected_gp_loglik(single, data, k);
  }
  CHECK(expected_input_loglik(q, data) == doctest::Approx(input_sum / 3.0).epsilon(1e-13));
  CHECK(expected_gp_loglik(q, data, k) == doctest::Approx(gp_sum / 3.0).epsilon(1e-13));

  const MixtureQ permuted({q.mean(1), q.mean(2), q.mean(0)}, {q.var(1), q.var(2), q.var(0)});
  const ObjectiveTerms a = objective_terms(q, data, k);
  const ObjectiveTerms b = objective_terms(permuted, data, k);
  CHECK(a.entropy == doctest::Approx(b.entropy).epsilon(1e-13));
  CHECK(a.input_loglik == doctest::Approx(b.input_loglik).epsilon(1e-13));
  CHECK(a.gp_loglik == doctest::Approx(b.gp_loglik).epsilon(1e-13));
}

TEST_CASE("second-order GP term") {
  Dataset data = testutil::random_dataset(6, 12);
  const KernelParams theta(1.0, 2.0);
  const Matern32Kernel k(theta);
  const MixtureQ base = random_mixture(1, 6, 13);

  // Zero-variance limit.
  const MixtureQ point({base.mean(0)}, {Eigen::VectorXd::Constant(6, 1e-300)});
  const TransformedLatent x = split_coordinates(base.mean(0));
  CHECK(expected_gp_loglik(point, data, k) ==
        doctest::Approx(oracle::loglik_at(x.l, x.r, data, theta)).epsilon(1e-12));

  // Small variances: Monte Carlo and the finite-difference trace.
  const MixtureQ tight({base.mean(0)}, {Eigen::VectorXd::Constant(6, 1e-4)});
  const double taylor = expected_gp_loglik(tight, data, k);
  const oracle::Estimate mc = oracle::mc_expected_gp_loglik(tight, data, theta, 20000, 3);
  CHECK(std::abs(taylor - mc.mean) <= std::max(3.0 * mc.se, 1e-2 * std::abs(taylor)));

  auto f = [&](const Eigen::VectorXd& l) { return oracle::loglik_at(l, x.r, data, theta); };
  const Eigen::VectorXd fd_hess = oracle::fd_hessian_diag(f, x.l, 1e-3);
  const double trace_term = taylor - oracle::loglik_at(x.l, x.r, data, theta);
  const double fd_trace = 0.5 * fd_hess.sum() * 1e-4;
  CHECK(std::abs(trace_term - fd_trace) <= 1e-4 * std::abs(fd_trace));
}

TEST_CASE("objective decomposition and collapse") {
  const Dataset data = testutil::random_dataset(5, 21);
  const KernelParams theta(0.8, 1.5);
  const Matern32Kernel k(theta);
  const MixtureQ q = random_mixture(2, 5, 22);
  const ObjectiveTerms terms = objective_terms(q, data, k);
  CHECK(objective(q, data, theta) == -(terms.entropy + terms.input_loglik + terms.gp_loglik));

  double previous = -1e300;
  for (double v : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const MixtureQ shrunk({q.mean(0), q.mean(1)}, {Eigen::VectorXd::Constant(5, v), Eigen::VectorXd::Constant(5, v)});
    const double neg_entropy = -objective_terms(shrunk, data, k).entropy;
    CHECK(neg_entropy > previous);
    previous = neg_entropy;
  }
  CHECK(previous > 30.0);
}

TEST_CASE("objective gradient: exact parts and Taylor m-gradient against finite differences") {
  const Dataset data = testutil::random_dataset(5, 31);
  const MixtureQ q = random_mixture(3, 5, 32);
  const Eigen::VectorXd packed = q.pack();

  for (int part = 0; part < 2; ++part) {
    Eigen::VectorXd grad;
    auto value = [&](const Eigen::VectorXd& p) {
      const MixtureQ trial = MixtureQ::unpack(p, 3, 5);
      return part == 0 ? entropy_lower_bound(trial) : expected_input_loglik(trial, data);
    };
    if (part == 0) {
      (void)entropy_lower_bound(q, &grad);
    } else {
      (void)expected_input_loglik(q, data, &grad);
    }
    CHECK(oracle::relative_error(grad, oracle::fd_gradient(value, packed, 1e-6)) < 1e-5);
  }

  // Taylor term with v <= 1e-4: the dropped third derivatives are negligible.
  const MixtureQ tight = random_mixture(1, 5, 33, 1e-5, 1e-4);
  const Matern32Kernel k(KernelParams(1.0, 1.3));
  Eigen::VectorXd grad;
  (void)expected_gp_loglik(tight, data, k, &grad);
  auto gp_value = [&](const Eigen::VectorXd& p) { return expected_gp_loglik(MixtureQ::unpack(p, 1, 5), data, k); };
  const Eigen::VectorXd fd = oracle::fd_gradient(gp_value, tight.pack(), 1e-6);
  CHECK(oracle::relative_error(grad.head(4), fd.head(4)) < 1e-2);

  Eigen::VectorXd total;
  (void)objective_terms(q, data, k, &total);
  CHECK(total.isApprox(grad_objective_phi(q, data, KernelParams(1.0, 1.3))));
}

TEST_CASE("entropy and input gradients vanish at a constructed stationary point") {
  // K = 1, n = 1: -E log N(t | r, s) - 1/2 log(4 pi v) is stationary in m at m = t.
  Dataset data = testutil::random_dataset(1, 40);
  const MixtureQ q({Eigen::VectorXd::Constant(1, data.t(0))}, {Eigen::VectorXd::Constant(1, 0.2)});
  Eigen::VectorXd g_entropy;
  Eigen::VectorXd g_input;
  (void)entropy_lower_bound(q, &g_entropy);
  (void)expected_input_loglik(q, data, &g_input);
  CHECK(std::abs(g_entropy(0) + g_input(0)) < 1e-12);
}

TEST_CASE("fit: determinism, descent contract and near-noiseless inputs") {
  Dataset data = testutil::random_dataset(10, 50);
  FitConfig config;
  config.restarts = 2;
  config.seed = 3;
  const FitResult a = fit(data, config);
  const FitResult b = fit(data, config);
  CHECK(a.objective_trace == b.objective_trace);
  CHECK(a.tau_hat.values() == b.tau_hat.values());
  CHECK(a.theta == b.theta);
  for (const auto& trace : a.inner_traces) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
      CHECK(trace[i] <= trace[i - 1] + 1e-10);
    }
  }
  CHECK(a.restarts.size() == 2);
  CHECK(a.objective_trace.back() == doctest::Approx(a.restarts[static_cast<std::size_t>(a.best_restart)].final_objective));

  // sigma_t = 1e-3 range: the input likelihood pins tau_hat to t.
  Dataset tight = data;
  const double range = data.t.maxCoeff() - data.t.minCoeff();
  tight.t = Eigen::VectorXd::LinSpaced(10, range, 0.0);
  tight.sigma_t.setConstant(1e-3 * range);
  const FitResult pinned = fit(tight, config);
  CHECK((pinned.tau_hat_input_order() - tight.t).cwiseAbs().mean() < 1e-2);

  // Ascending input rows come back in input order.
  Dataset asc = tight;
  asc.t = tight.t.reverse();
  asc.y = tight.y.reverse();
  const FitResult rev = fit(asc, config);
  CHECK(rev.reversed);
  CHECK((rev.tau_hat_input_order() - asc.t).cwiseAbs().mean() < 1e-2);
}

TEST_CASE("fit argument errors") {
  const Dataset one = testutil::random_dataset(1, 1);
  CHECK(testutil::error_code([&] { (void)fit(one); }) == ErrorCode::InvalidArgument);
  FitConfig config;
  config.components = 0;
  CHECK(testutil::error_code([&] { (void)fit(testutil::random_dataset(4, 1), config); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("variational theta box and initial theta") {
  const Dataset data = testutil::random_dataset(11, 7);
  const ThetaBounds base = theta_bounds(data);
  const ThetaBounds box = variational_theta_bounds(data);
  const double range = data.t.maxCoeff() - data.t.minCoeff();
  CHECK(box.lower(1) == doctest::Approx(std::log(range / 10.0)));
  CHECK(box.upper == base.upper);
  CHECK(box.lower(0) == base.lower(0));
  const KernelParams start = default_initial_theta(data, box);
  CHECK(start.length() == doctest::Approx(range / 10.0));
  CHECK(box.contains(log_of(start)));
}

TEST_CASE("initial mixture follows the documented recipe") {
  const Dataset data = testutil::random_dataset(6, 70);
  const MixtureQ q = initial_mixture(data, 3, 5);
  const double mean_sigma = data.sigma_t.mean();
  for (int k = 0; k < 3; ++k) {
    CHECK((q.var(k).array() == std::min(mean_sigma * mean_sigma, 1.0)).all());
  }
  CHECK(q.mean(0) != q.mean(1));
  const MixtureQ again = initial_mixture(data, 3, 5);
  CHECK(again.mean(2) == q.mean(2));
}
