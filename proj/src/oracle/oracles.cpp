#include "ordgp/oracle/oracles.hpp"

#include <cmath>
#include <numbers>

#include "ordgp/transform.hpp"

namespace ordgp::oracle {

namespace {

Estimate summarize(double sum, double sum_sq, int draws) {
  const double n = draws;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

}  // namespace

Eigen::VectorXd sample_mixture(const MixtureQ& q, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, q.components() - 1);
  const int k = pick(rng);
  Eigen::VectorXd x(q.dim());
  for (int j = 0; j < q.dim(); ++j) {
    x(j) = q.mean(k)(j) + std::sqrt(q.var(k)(j)) * standard_normal(rng);
  }
  return x;
}

double mixture_log_density(const MixtureQ& q, const Eigen::VectorXd& x) {
  const int kc = q.components();
  Eigen::VectorXd logs(kc);
  for (int k = 0; k < kc; ++k) {
    double s = 0.0;
    for (int j = 0; j < q.dim(); ++j) {
      const double v = q.var(k)(j);
      const double d = x(j) - q.mean(k)(j);
      s += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * d * d / v;
    }
    logs(k) = s;
  }
  const double top = logs.maxCoeff();
  return top + std::log((logs.array() - top).exp().sum()) - std::log(static_cast<double>(kc));
}

Estimate mc_expected_input_loglik(const MixtureQ& q, const Dataset& data, int draws, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  const auto n = data.size();
  for (int d = 0; d < draws; ++d) {
    const Eigen::VectorXd x = sample_mixture(q, rng);
    // tau_i = r + sum_{j >= i} exp(l_j), built directly.
    double tau = x(n - 1);
    double value = -0.5 * std::pow((tau - data.t(n - 1)) / data.sigma_t(n - 1), 2);
    for (Eigen::Index i = n - 2; i >= 0; --i) {
      tau += std::exp(x(i));
      value += -0.5 * std::pow((tau - data.t(i)) / data.sigma_t(i), 2);
    }
    sum += value;
    sum_sq += value * value;
  }
  return summarize(sum, sum_sq, draws);
}

Estimate mc_entropy(const MixtureQ& q, int draws, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int d = 0; d < draws; ++d) {
    const double value = -mixture_log_density(q, sample_mixture(q, rng));
    sum += value;
    sum_sq += value * value;
  }
  return summarize(sum, sum_sq, draws);
}

double loglik_at(const Eigen::VectorXd& l, double r, const Dataset& data, const KernelParams& theta) {
  const auto n = l.size() + 1;
  Eigen::VectorXd tau(n);
  tau(n - 1) = r;
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    tau(i) = tau(i + 1) + std::exp(l(i));
  }
  const Matern32Kernel kernel(theta);
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cov(i, j) = kernel.value(tau(i), tau(j));
    }
    cov(i, i) += data.sigma_y(i) * data.sigma_y(i);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const Eigen::VectorXd alpha = ldlt.solve(data.y);
  const double log_det = ldlt.vectorD().array().log().sum();
  return -0.5 * data.y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

Estimate mc_expected_gp_loglik(const MixtureQ& q, const Dataset& data, const KernelParams& theta, int draws,
                               std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  const auto n = q.dim();
  for (int d = 0; d < draws; ++d) {
    const Eigen::VectorXd x = sample_mixture(q, rng);
    const double value = loglik_at(x.head(n - 1), x(n - 1), data, theta);
    sum += value;
    sum_sq += value * value;
  }
  return summarize(sum, sum_sq, draws);
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up(j) += h;
    down(j) -= h;
    g(j) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd fd_hessian_diag(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                double h) {
  const double f0 = f(x);
  const auto second = [&](Eigen::Index j, double step) {
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up(j) += step;
    down(j) -= step;
    return (f(up) - 2.0 * f0 + f(down)) / (step * step);
  };
  Eigen::VectorXd out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    out(j) = (4.0 * second(j, 0.5 * h) - second(j, h)) / 3.0;
  }
  return out;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

Eigen::Vector2d grid_posterior_mean_n2(const Dataset& data, const KernelParams& theta, int cells) {
  const double lo1 = data.t(0) - 7.0 * data.sigma_t(0);
  const double hi1 = data.t(0) + 7.0 * data.sigma_t(0);
  const double lo2 = data.t(1) - 7.0 * data.sigma_t(1);
  const double hi2 = data.t(1) + 7.0 * data.sigma_t(1);
  const double h1 = (hi1 - lo1) / cells;
  const double h2 = (hi2 - lo2) / cells;
  const Matern32Kernel kernel(theta);
  const double s11 = kernel.value(0.0, 0.0) + data.sigma_y(0) * data.sigma_y(0);
  const double s22 = kernel.value(0.0, 0.0) + data.sigma_y(1) * data.sigma_y(1);

  // Log weights first, then a max-shifted sum.
  std::vector<double> logw;
  std::vector<Eigen::Vector2d> points;
  logw.reserve(static_cast<std::size_t>(cells) * cells);
  for (int a = 0; a < cells; ++a) {
    const double t1 = lo1 + (a + 0.5) * h1;
    for (int b = 0; b < cells; ++b) {
      const double t2 = lo2 + (b + 0.5) * h2;
      if (!(t1 > t2)) {
        continue;
      }
      const double k12 = kernel.value(t1, t2);
      const double det = s11 * s22 - k12 * k12;
      const double y1 = data.y(0);
      const double y2 = data.y(1);
      const double quad = (s22 * y1 * y1 - 2.0 * k12 * y1 * y2 + s11 * y2 * y2) / det;
      const double log_y = -0.5 * quad - 0.5 * std::log(det);
      const double log_t = -0.5 * std::pow((t1 - data.t(0)) / data.sigma_t(0), 2) -
                           0.5 * std::pow((t2 - data.t(1)) / data.sigma_t(1), 2);
      logw.push_back(log_y + log_t);
      points.emplace_back(t1, t2);
    }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < logw.size(); ++k) {
    const double w = std::exp(logw[k] - top);
    total += w;
    acc += w * points[k];
  }
  return acc / total;
}

}  // namespace ordgp::oracle
