#include "ordgp/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ordgp/deriv.hpp"
#include "ordgp/error.hpp"
#include "ordgp/random.hpp"

namespace ordgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(const Eigen::VectorXd& x) {
  const double top = x.maxCoeff();
  return top + std::log((x.array() - top).exp().sum());
}

// Offsets of component k's means and log-variances in the packed layout.
Eigen::Index mean_offset(int k, int n) { return 2 * static_cast<Eigen::Index>(n) * k; }
Eigen::Index logvar_offset(int k, int n) { return mean_offset(k, n) + n; }

}  // namespace

double entropy_lower_bound(const MixtureQ& q, Eigen::VectorXd* grad) {
  const int kc = q.components();
  const int n = q.dim();
  const double log_k = std::log(static_cast<double>(kc));

  // log N(m_i; m_j, diag(v_i + v_j))
  Eigen::MatrixXd log_n(kc, kc);
  for (int i = 0; i < kc; ++i) {
    for (int j = 0; j < kc; ++j) {
      const Eigen::ArrayXd s = q.var(i).array() + q.var(j).array();
      const Eigen::ArrayXd diff = q.mean(i).array() - q.mean(j).array();
      log_n(i, j) = -0.5 * ((kLog2Pi + s.log()) + diff.square() / s).sum();
    }
  }

  double bound = 0.0;
  Eigen::MatrixXd weights(kc, kc);
  for (int i = 0; i < kc; ++i) {
    const Eigen::VectorXd row = log_n.row(i).transpose();
    const double lse = log_sum_exp(row);
    bound -= (lse - log_k) / kc;
    weights.row(i) = (row.array() - lse).exp().transpose();
  }

  if (grad != nullptr) {
    grad->setZero(2 * n * kc);
    for (int i = 0; i < kc; ++i) {
      for (int j = 0; j < kc; ++j) {
        const double w = weights(i, j) / kc;
        const Eigen::ArrayXd s = q.var(i).array() + q.var(j).array();
        const Eigen::ArrayXd diff = q.mean(i).array() - q.mean(j).array();
        // d log N_ij / d m_i = -diff / s, / d m_j = +diff / s
        const Eigen::ArrayXd dm = -diff / s;
        // d log N_ij / d v_i = d / d v_j = -1/(2s) + diff^2 / (2 s^2)
        const Eigen::ArrayXd dv = -0.5 / s + 0.5 * diff.square() / s.square();
        grad->segment(mean_offset(i, n), n).array() -= w * dm;
        grad->segment(mean_offset(j, n), n).array() += w * dm;
        grad->segment(logvar_offset(i, n), n).array() -= w * dv * q.var(i).array();
        grad->segment(logvar_offset(j, n), n).array() -= w * dv * q.var(j).array();
      }
    }
  }
  return bound;
}

InputLikTerms input_lik_terms(const Eigen::VectorXd& m, const Eigen::VectorXd& v, const Dataset& data) {
  const auto n = m.size();
  InputLikTerms terms;
  terms.prefix_precision.resize(n);
  terms.mean_tau.resize(n);
  terms.var_tau.resize(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += 1.0 / (data.sigma_t(i) * data.sigma_t(i));
    terms.prefix_precision(i) = acc;
  }
  double mean = m(n - 1);
  double var = v(n - 1);
  terms.mean_tau(n - 1) = mean;
  terms.var_tau(n - 1) = var;
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    // E e^l = e^{m + v/2};  Var e^l = e^{2m + v} (e^v - 1)
    const double g = std::exp(m(i) + 0.5 * v(i));
    const double gv = std::exp(2.0 * m(i) + v(i)) * std::expm1(v(i));
    mean += g;
    var += gv;
    terms.mean_tau(i) = mean;
    terms.var_tau(i) = var;
  }
  if (!terms.mean_tau.allFinite() || !terms.var_tau.allFinite()) {
    throw Error(ErrorCode::Overflow, "lognormal moments are not finite");
  }
  return terms;
}

double expected_input_loglik(const MixtureQ& q, const Dataset& data, Eigen::VectorXd* grad) {
  const int kc = q.components();
  const int n = q.dim();
  if (data.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "mixture dimension must equal the number of observations");
  }
  if (grad != nullptr) {
    grad->setZero(2 * n * kc);
  }
  const Eigen::ArrayXd precision = data.sigma_t.array().square().inverse();

  double total = 0.0;
  for (int k = 0; k < kc; ++k) {
    const auto& m = q.mean(k);
    const auto& v = q.var(k);
    const InputLikTerms terms = input_lik_terms(m, v, data);
    const Eigen::ArrayXd resid = terms.mean_tau.array() - data.t.array();
    total += -0.5 * ((resid.square() + terms.var_tau.array()) * precision).sum();

    if (grad != nullptr) {
      // Coordinate j of the gaps moves tau_i for every i <= j, so each
      // derivative needs the prefix sums R_j = sum_{i<=j} resid_i / sigma_i^2
      // and S_j = sum_{i<=j} 1 / sigma_i^2.
      Eigen::VectorXd dm(n), dv(n);
      double prefix_resid = 0.0;
      for (int j = 0; j < n - 1; ++j) {
        prefix_resid += resid(j) * precision(j);
        const double s = terms.prefix_precision(j);
        const double g = std::exp(m(j) + 0.5 * v(j));
        const double e2mv = std::exp(2.0 * m(j) + v(j));
        const double gv = e2mv * std::expm1(v(j));
        const double second = e2mv * std::exp(v(j));  // E e^{2l}
        dm(j) = -g * prefix_resid - gv * s;
        dv(j) = -0.5 * g * prefix_resid - 0.5 * (gv + second) * s;
      }
      prefix_resid += resid(n - 1) * precision(n - 1);
      dm(n - 1) = -prefix_resid;
      dv(n - 1) = -0.5 * terms.prefix_precision(n - 1);
      grad->segment(mean_offset(k, n), n) += dm / kc;
      grad->segment(logvar_offset(k, n), n) += (dv.array() * v.array()).matrix() / kc;
    }
  }
  return total / kc;
}

double expected_gp_loglik(const MixtureQ& q, const Dataset& data, const StationaryKernel& kernel,
                          Eigen::VectorXd* grad) {
  const int kc = q.components();
  const int n = q.dim();
  if (data.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "mixture dimension must equal the number of observations");
  }
  if (grad != nullptr) {
    grad->setZero(2 * n * kc);
  }
  double total = 0.0;
  for (int k = 0; k < kc; ++k) {
    const TransformedLatent x = split_coordinates(q.mean(k));
    DerivWorkspace ws(x, data, kernel);
    const DerivWorkspace::Result d = ws.sweep(true);
    const Eigen::VectorXd v_gaps = q.var(k).head(n - 1);
    total += ws.log_lik() + 0.5 * d.hess_diag.dot(v_gaps);
    if (grad != nullptr) {
      grad->segment(mean_offset(k, n), n - 1) += d.grad / kc;
      grad->segment(logvar_offset(k, n), n - 1) +=
          (0.5 * d.hess_diag.array() * v_gaps.array()).matrix() / kc;
    }
  }
  return total / kc;
}

ObjectiveTerms objective_terms(const MixtureQ& q, const Dataset& data, const StationaryKernel& kernel,
                               Eigen::VectorXd* grad) {
  ObjectiveTerms terms;
  if (grad == nullptr) {
    terms.entropy = entropy_lower_bound(q);
    terms.input_loglik = expected_input_loglik(q, data);
    terms.gp_loglik = expected_gp_loglik(q, data, kernel);
    return terms;
  }
  Eigen::VectorXd g_entropy, g_input, g_gp;
  terms.entropy = entropy_lower_bound(q, &g_entropy);
  terms.input_loglik = expected_input_loglik(q, data, &g_input);
  terms.gp_loglik = expected_gp_loglik(q, data, kernel, &g_gp);
  *grad = -(g_entropy + g_input + g_gp);
  return terms;
}

double objective(const MixtureQ& q, const Dataset& data, const KernelParams& theta) {
  return objective_terms(q, data, Matern32Kernel(theta)).total();
}

Eigen::VectorXd grad_objective_phi(const MixtureQ& q, const Dataset& data, const KernelParams& theta) {
  Eigen::VectorXd grad;
  (void)objective_terms(q, data, Matern32Kernel(theta), &grad);
  return grad;
}

ThetaBounds variational_theta_bounds(const Dataset& data) {
  ThetaBounds box = theta_bounds(data);
  const double range = data.t.maxCoeff() - data.t.minCoeff();
  if (data.size() > 1 && range > 0.0) {
    const double spacing = range / static_cast<double>(data.size() - 1);
    box.lower(1) = std::min(box.upper(1), std::max(box.lower(1), std::log(spacing)));
  }
  return box;
}

KernelParams default_initial_theta(const Dataset& data, const ThetaBounds& box) {
  double range = data.t.maxCoeff() - data.t.minCoeff();
  if (!(range > 0.0)) range = 1.0;
  // The sf box is centred (geometrically) on sd(y).
  const Eigen::Vector2d start(0.5 * (box.lower(0) + box.upper(0)), std::log(0.1 * range));
  return params_from_log(box.clamp(start));
}

MixtureQ initial_mixture(const Dataset& canonical, int components, std::uint64_t seed) {
  const auto n = canonical.size();
  const double spread = canonical.t.maxCoeff() - canonical.t.minCoeff();
  const double min_gap = 1e-3 * (spread > 0.0 ? spread : 1.0);
  const LatentInput start = repair_order(canonical.t, min_gap);
  const TransformedLatent x = to_latent(start);
  Eigen::VectorXd base(n);
  base << x.l, x.r;

  const double mean_sigma_t = canonical.sigma_t.mean();
  const double jitter_sd = 0.1 * mean_sigma_t;
  const double v0 = std::min(mean_sigma_t * mean_sigma_t, 1.0);

  Rng rng(seed);
  std::vector<Eigen::VectorXd> means, vars;
  for (int k = 0; k < components; ++k) {
    Eigen::VectorXd m = base;
    for (Eigen::Index j = 0; j < n; ++j) {
      m(j) += jitter_sd * standard_normal(rng);
    }
    means.push_back(std::move(m));
    vars.push_back(Eigen::VectorXd::Constant(n, v0));
  }
  return MixtureQ(std::move(means), std::move(vars));
}

namespace {

struct RestartOutcome {
  std::optional<MixtureQ> q;
  std::optional<KernelParams> theta;
  double final_objective = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  std::vector<std::vector<double>> inner_traces;
  std::string error;
};

RestartOutcome run_restart(const Dataset& data, const FitConfig& config, std::uint64_t seed) {
  RestartOutcome out;
  const int n = static_cast<int>(data.size());
  const int kc = config.components;
  const ThetaBounds box = variational_theta_bounds(data);

  MixtureQ q = initial_mixture(data, kc, seed);
  KernelParams theta = config.fixed_theta     ? *config.fixed_theta
                       : config.initial_theta ? *config.initial_theta
                                              : default_initial_theta(data, box);

  double current = objective(q, data, theta);
  if (!std::isfinite(current)) {
    throw Error(ErrorCode::OptimizationFailed, "initial objective is not finite");
  }
  out.trace.push_back(current);

  double last_theta_move = 0.1;  // max |change| in log theta over the previous theta step
  for (int round = 0; round < config.outer_rounds; ++round) {
    const double round_start = current;

    // Mixture step at fixed theta.
    const Matern32Kernel kernel(theta);
    ValueAndGradient fg = [&](const Eigen::VectorXd& packed, Eigen::VectorXd* grad) {
      try {
        const MixtureQ trial = MixtureQ::unpack(packed, kc, n);
        return objective_terms(trial, data, kernel, grad).total();
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    DescentResult step = minimize_descent(fg, q.pack(), config.inner);
    q = MixtureQ::unpack(step.x, kc, n);
    current = step.value;
    out.inner_traces.push_back(std::move(step.trace));
    out.trace.push_back(current);

    // Theta step: only the expected GP term depends on theta.
    if (!config.fixed_theta) {
      auto negative_gp = [&](const Eigen::VectorXd& log_theta) {
        return -expected_gp_loglik(q, data, Matern32Kernel(params_from_log(log_theta)));
      };
      BoxSearchOptions options;
      options.max_iterations = config.theta_iterations;
      options.initial_step = std::clamp(2.0 * last_theta_move, 4.0 * config.theta_tolerance, 0.2);
      options.size_tolerance = config.theta_tolerance;
      const BoxSearchResult best = minimize_in_box(negative_gp, box.clamp(log_of(theta)), box.lower,
                                                   box.upper, options);
      const KernelParams candidate = params_from_log(best.x);
      const double candidate_f = objective(q, data, candidate);
      if (std::isfinite(candidate_f) && candidate_f < current) {
        last_theta_move = (best.x - log_of(theta)).cwiseAbs().maxCoeff();
        theta = candidate;
        current = candidate_f;
      } else {
        last_theta_move = 0.0;
      }
      out.trace.push_back(current);
    }

    const double change = std::abs(round_start - current) / std::max(1.0, std::abs(round_start));
    if (change < config.outer_tolerance) {
      break;
    }
  }
  out.q = std::move(q);
  out.theta = theta;
  out.final_objective = current;
  return out;
}

}  // namespace

FitResult fit(const Dataset& data, const FitConfig& config) {
  const CanonicalDataset canonical = canonicalize(data);
  if (config.components < 1 || config.restarts < 1) {
    throw Error(ErrorCode::InvalidArgument, "fit needs components >= 1 and restarts >= 1");
  }
  if (canonical.data.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "fit needs at least two observations");
  }

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.restarts));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < config.restarts; ++r) {
    try {
      outcomes[static_cast<std::size_t>(r)] =
          run_restart(canonical.data, config, derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    } catch (const std::exception& e) {
      outcomes[static_cast<std::size_t>(r)].error = e.what();
    }
  }

  int best = -1;
  std::vector<RestartSummary> summaries;
  for (int r = 0; r < config.restarts; ++r) {
    const auto& o = outcomes[static_cast<std::size_t>(r)];
    const bool failed = !o.q.has_value() || !std::isfinite(o.final_objective);
    summaries.push_back(RestartSummary{o.final_objective, failed, o.error});
    if (!failed && (best < 0 || o.final_objective < outcomes[static_cast<std::size_t>(best)].final_objective)) {
      best = r;
    }
  }
  if (best < 0) {
    throw Error(ErrorCode::OptimizationFailed, "every restart failed: " + outcomes.front().error);
  }
  auto& chosen = outcomes[static_cast<std::size_t>(best)];
  LatentInput tau_hat = expected_tau(*chosen.q);
  return FitResult{std::move(*chosen.q),
                   *chosen.theta,
                   std::move(tau_hat),
                   canonical.reversed,
                   std::move(chosen.trace),
                   std::move(chosen.inner_traces),
                   std::move(summaries),
                   best};
}

}  // namespace ordgp
