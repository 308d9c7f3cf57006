#include "ordgp/mcmc.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ordgp/error.hpp"
#include "ordgp/transform.hpp"

namespace ordgp {

double woodbury_update(Eigen::MatrixXd& inverse, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const Eigen::VectorXd inv_u = inverse * u;
  const double denom = 1.0 + v.dot(inv_u);
  if (!(std::abs(denom) >= 1e-12)) {
    throw Error(ErrorCode::SingularUpdate, "1 + v^T K^{-1} u is numerically zero");
  }
  const Eigen::VectorXd v_inv = inverse.transpose() * v;
  inverse.noalias() -= (inv_u / denom) * v_inv.transpose();
  return denom;
}

Eigen::MatrixXd woodbury_updated(const Eigen::MatrixXd& inverse, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& v) {
  Eigen::MatrixXd out = inverse;
  (void)woodbury_update(out, u, v);
  return out;
}

void ChainConfig::validate() const {
  if (iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  }
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "burn_in_fraction must lie in [0, 1)");
  }
  if (refresh_period < 1 || max_retained < 1) {
    throw Error(ErrorCode::InvalidArgument, "refresh_period and max_retained must be >= 1");
  }
}

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double input_loglik(const Eigen::VectorXd& tau, const Dataset& data) {
  return -0.5 * ((tau - data.t).array() / data.sigma_t.array()).square().sum();
}

KernelParams starting_theta(const Dataset& data, const ChainConfig& config, const Eigen::VectorXd& tau) {
  if (config.initial_theta) {
    return *config.initial_theta;
  }
  return maximize_marginal_theta(data, tau, theta_bounds(data), 200);
}

Eigen::VectorXd starting_tau(const Dataset& data, const ChainConfig& config) {
  if (config.initial_tau) {
    return LatentInput(*config.initial_tau).values();
  }
  const double spread = data.t.maxCoeff() - data.t.minCoeff();
  return repair_order(data.t, 1e-3 * (spread > 0.0 ? spread : 1.0)).values();
}

}  // namespace

Chain::Chain(const Dataset& canonical, const ChainConfig& config)
    : data_(canonical),
      config_(config),
      box_(theta_bounds(canonical)),
      rng_(config.seed),
      tau_(starting_tau(canonical, config)),
      theta_(starting_theta(canonical, config, tau_)) {
  config_.validate();
  canonical.validate();
  scale_ = config.proposal_scale ? *config.proposal_scale : canonical.sigma_t;
  if (scale_.size() != canonical.size()) {
    throw Error(ErrorCode::LengthMismatch, "proposal_scale must have one entry per observation");
  }
  rebuild();
}

void Chain::rebuild() {
  const Matern32Kernel kernel(theta_);
  GPWorkspace ws = factorize(covariance_matrix(tau_, data_.sigma_y, kernel), data_.y, theta_.variance());
  inverse_ = ws.inverse();
  log_det_ = ws.log_det;
  log_lik_y_ = log_marginal(ws, data_.y);
  log_lik_t_ = input_loglik(tau_, data_);
  cov_ = std::move(ws.cov);
}

void Chain::refresh() { rebuild(); }

double Chain::inverse_drift() const {
  const auto n = cov_.rows();
  return (inverse_ * cov_ - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
}

bool Chain::mh_step(int i) {
  const double proposal = tau_(i) + scale_(i) * standard_normal(rng_);
  const auto n = static_cast<int>(tau_.size());
  const bool ordered = (i == 0 || tau_(i - 1) > proposal) && (i == n - 1 || proposal > tau_(i + 1));
  if (!ordered) {
    ++counters_.proposals;
    ++counters_.ordering_rejections;
    return false;
  }
  return mh_step_to(i, proposal, std::log(uniform01(rng_)));
}

bool Chain::mh_step_to(int i, double proposal, double log_uniform) {
  ++counters_.proposals;
  const auto n = tau_.size();
  if (!((i == 0 || tau_(i - 1) > proposal) && (i == n - 1 || proposal > tau_(i + 1)))) {
    ++counters_.ordering_rejections;
    return false;
  }

  const Matern32Kernel kernel(theta_);
  // Changing tau_i replaces row and column i of K. Split the change into
  // K + e_i delta^T + delta e_i^T with half of any diagonal change in each.
  Eigen::VectorXd delta(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    delta(k) = (k == i) ? 0.0 : kernel.value(proposal, tau_(k)) - cov_(i, k);
  }
  delta(i) = 0.5 * (kernel.value(proposal, proposal) - kernel.value(tau_(i), tau_(i)));
  const Eigen::VectorXd unit = Eigen::VectorXd::Unit(n, i);

  Eigen::MatrixXd candidate = inverse_;
  double candidate_log_det = 0.0;
  try {
    const double r1 = woodbury_update(candidate, unit, delta);
    const double r2 = woodbury_update(candidate, delta, unit);
    const double ratio = r1 * r2;
    if (!(ratio > 0.0)) {
      throw Error(ErrorCode::SingularUpdate, "determinant ratio is not positive");
    }
    candidate_log_det = log_det_ + std::log(ratio);
    counters_.woodbury_updates += 2;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularUpdate) {
      throw;
    }
    ++counters_.singular_fallbacks;
    Eigen::MatrixXd cov = cov_;
    cov.row(i) += delta.transpose();
    cov.col(i) += delta;
    const GPWorkspace ws = factorize(cov, data_.y, theta_.variance());
    ++counters_.dense_inversions;
    candidate = ws.inverse();
    candidate_log_det = ws.log_det;
  }

  const double n_d = static_cast<double>(n);
  const double new_lik_y =
      -0.5 * data_.y.dot(candidate * data_.y) - 0.5 * candidate_log_det - n_d * kHalfLog2Pi;
  const double old_t = (tau_(i) - data_.t(i)) / data_.sigma_t(i);
  const double new_t = (proposal - data_.t(i)) / data_.sigma_t(i);
  const double new_lik_t = log_lik_t_ - 0.5 * (new_t * new_t - old_t * old_t);

  // Symmetric proposal: the q-ratio cancels.
  const double log_ratio = (new_lik_y + new_lik_t) - (log_lik_y_ + log_lik_t_);
  if (!(log_uniform < log_ratio)) {
    return false;
  }
  ++counters_.accepted;
  tau_(i) = proposal;
  cov_.row(i) += delta.transpose();
  cov_.col(i) += delta;
  inverse_ = std::move(candidate);
  log_det_ = candidate_log_det;
  log_lik_y_ = new_lik_y;
  log_lik_t_ = new_lik_t;
  return true;
}

bool Chain::theta_step(int component) {
  ++counters_.theta_proposals;
  Eigen::Vector2d log_theta = log_of(theta_);
  log_theta(component) += config_.theta_proposal_scale * standard_normal(rng_);
  const double log_u = std::log(uniform01(rng_));
  if (!box_.contains(log_theta)) {
    return false;
  }
  const KernelParams proposal = params_from_log(log_theta);
  GPWorkspace ws;
  try {
    ws = factorize(covariance_matrix(tau_, data_.sigma_y, Matern32Kernel(proposal)), data_.y,
                   proposal.variance());
  } catch (const Error&) {
    return false;
  }
  const double new_lik_y = log_marginal(ws, data_.y);
  if (!(log_u < new_lik_y - log_lik_y_)) {
    return false;
  }
  ++counters_.theta_accepted;
  theta_ = proposal;
  inverse_ = ws.inverse();
  log_det_ = ws.log_det;
  log_lik_y_ = new_lik_y;
  cov_ = std::move(ws.cov);
  return true;
}

void Chain::sweep() {
  const auto n = static_cast<int>(tau_.size());
  for (int i = 0; i < n; ++i) {
    (void)mh_step(i);
  }
  if (config_.sample_theta) {
    (void)theta_step(0);
    (void)theta_step(1);
  }
}

std::vector<GaussianPrediction> mixture_predictions(const Dataset& canonical,
                                                    const std::vector<Eigen::VectorXd>& taus,
                                                    const std::vector<KernelParams>& thetas,
                                                    const Eigen::VectorXd& queries) {
  const auto samples = static_cast<int>(taus.size());
  const auto nq = static_cast<std::size_t>(queries.size());
  std::vector<std::vector<GaussianPrediction>> per_sample(taus.size());
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < samples; ++s) {
    const Matern32Kernel kernel(thetas[static_cast<std::size_t>(s)]);
    const Eigen::VectorXd& tau = taus[static_cast<std::size_t>(s)];
    const GPWorkspace ws = build_workspace(tau, canonical, kernel);
    auto& out = per_sample[static_cast<std::size_t>(s)];
    out.resize(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      out[q] = predict(queries(static_cast<Eigen::Index>(q)), tau, ws, kernel);
    }
  }
  std::vector<GaussianPrediction> result(nq);
  if (samples == 0) {
    return result;
  }
  for (std::size_t q = 0; q < nq; ++q) {
    double mean = 0.0;
    double second = 0.0;
    for (const auto& preds : per_sample) {
      mean += preds[q].mean;
      second += preds[q].var + preds[q].mean * preds[q].mean;
    }
    mean /= samples;
    second /= samples;
    result[q] = GaussianPrediction{mean, std::max(0.0, second - mean * mean)};
  }
  return result;
}

ChainSummary run_chain(const Dataset& data, const ChainConfig& config) {
  config.validate();
  const CanonicalDataset canonical = canonicalize(data);
  Chain chain(canonical.data, config);
  const auto n = canonical.data.size();

  const int burn_in = static_cast<int>(std::floor(config.burn_in_fraction * config.iterations));
  std::vector<Eigen::VectorXd> taus;
  std::vector<KernelParams> thetas;
  taus.reserve(static_cast<std::size_t>(config.iterations - burn_in));
  double max_drift = 0.0;

  for (int sweep = 1; sweep <= config.iterations; ++sweep) {
    chain.sweep();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!(chain.tau()(i) > chain.tau()(i + 1))) {
        throw Error(ErrorCode::NonDecreasingInput, "chain state lost the ordering");
      }
    }
    if (sweep % config.refresh_period == 0) {
      max_drift = std::max(max_drift, chain.inverse_drift());
      chain.refresh();
    }
    if (sweep > burn_in) {
      taus.push_back(chain.tau());
      thetas.push_back(chain.theta());
    }
  }

  // Uniform subsampling down to max_retained.
  if (static_cast<int>(taus.size()) > config.max_retained) {
    const std::size_t total = taus.size();
    std::vector<Eigen::VectorXd> kept_tau;
    std::vector<KernelParams> kept_theta;
    for (int k = 0; k < config.max_retained; ++k) {
      const std::size_t idx = static_cast<std::size_t>(k) * total / static_cast<std::size_t>(config.max_retained);
      kept_tau.push_back(taus[idx]);
      kept_theta.push_back(thetas[idx]);
    }
    taus = std::move(kept_tau);
    thetas = std::move(kept_theta);
  }

  ChainSummary summary;
  summary.reversed = canonical.reversed;
  summary.retained = static_cast<int>(taus.size());
  summary.tau_mean = Eigen::VectorXd::Zero(n);
  summary.tau_sd = Eigen::VectorXd::Zero(n);
  for (const auto& t : taus) {
    summary.tau_mean += t;
  }
  summary.tau_mean /= static_cast<double>(taus.size());
  for (const auto& t : taus) {
    summary.tau_sd.array() += (t - summary.tau_mean).array().square();
  }
  summary.tau_sd = (summary.tau_sd / std::max<double>(1.0, static_cast<double>(taus.size()) - 1.0)).cwiseSqrt();

  const ChainCounters& c = chain.counters();
  summary.counters = c;
  summary.acceptance_rate = c.proposals ? static_cast<double>(c.accepted) / static_cast<double>(c.proposals) : 0.0;
  summary.theta_acceptance_rate =
      c.theta_proposals ? static_cast<double>(c.theta_accepted) / static_cast<double>(c.theta_proposals) : 0.0;
  summary.max_drift_before_refresh = max_drift;
  if (config.queries.size() > 0) {
    summary.predictions = mixture_predictions(canonical.data, taus, thetas, config.queries);
  }
  summary.theta_samples = std::move(thetas);
  return summary;
}

}  // namespace ordgp
