#include "ordgp/deriv.hpp"

#include <cassert>
#include <cmath>

#include "ordgp/error.hpp"
#include "ordgp/random.hpp"

namespace ordgp {

DerivWorkspace::DerivWorkspace(const TransformedLatent& x, const Dataset& data, const StationaryKernel& kernel)
    : kernel_(kernel), l_(x.l), tau_(tau_positions(x)), gp_(build_workspace(tau_, data, kernel)) {
  inverse_ = gp_.inverse();
  t_matrix_ = gp_.gamma * gp_.gamma.transpose() - inverse_;
  log_lik_ = log_marginal(gp_, data.y);
}

DerivWorkspace::Result DerivWorkspace::sweep(bool with_hessian, const StepObserver& observer) {
  const auto n = tau_.size();
  const auto gaps = n - 1;
  Result out;
  out.grad.resize(gaps);
  if (with_hessian) {
    out.hess_diag.resize(gaps);
  }
  s_.setZero(n, n);
  d_.setZero(n, n);
  if (gaps == 0) {
    return out;
  }

  const Eigen::MatrixXd& w = inverse_;
  const Eigen::MatrixXd& t = t_matrix_;
  const Eigen::VectorXd& gamma = gp_.gamma;

  double tr_ts = 0.0;
  double tr_td = 0.0;
  double tr_uu = 0.0;
  Eigen::VectorXd s_gamma = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_s_gamma = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd u;
  if (with_hessian) {
    u.setZero(n, n);
  }
  Eigen::VectorXd a(n);
  Eigen::VectorXd b(n);
  Eigen::VectorXd u_wi(n);
  Eigen::VectorXd d2_row(n);

  for (Eigen::Index i = 0; i < gaps; ++i) {
    // Row i of dK/dtau_i; column i is the same vector. For k < i, S still
    // holds d1(tau_k, tau_i) from step k, and d1 is odd for a stationary
    // kernel. Entries past i also need d2 for D, evaluated together with d1.
    a(i) = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) {
      a(k) = -s_(k, i);
    }
    for (Eigen::Index k = i + 1; k < n; ++k) {
      if (with_hessian) {
        kernel_.d1_d2(tau_(i), tau_(k), a(k), d2_row(k));
      } else {
        a(k) = kernel_.d1(tau_(i), tau_(k));
      }
    }
    s_.row(i) += a.transpose();
    s_.col(i) += a;
    tr_ts += 2.0 * a.dot(t.col(i));

    const double e = std::exp(l_(i));
    out.grad(i) = 0.5 * e * tr_ts;

    if (with_hessian) {
      // S gains a e_i^T + e_i a^T, so S gamma and W S gamma move in O(n) once
      // b = W a is known, and U = W S gains w_i a^T + b e_i^T.
      const double a_gamma = a.dot(gamma);
      b.noalias() = w * a;
      s_gamma += a * gamma(i);
      s_gamma(i) += a_gamma;
      w_s_gamma += b * gamma(i) + w.col(i) * a_gamma;

      // tr((U + dU)^2) = tr(U^2) + 2 tr(U dU) + tr(dU^2), dU = w_i a^T + b e_i^T.
      u_wi.noalias() = u * w.col(i);
      const double a_wi = a.dot(w.col(i));
      tr_uu += 2.0 * (a.dot(u_wi) + u.row(i).dot(b)) + a_wi * a_wi + 2.0 * a.dot(b) * w(i, i) + b(i) * b(i);
      u.noalias() += w.col(i) * a.transpose();
      u.col(i) += b;

      for (Eigen::Index j = 0; j < i; ++j) {
        tr_td -= 2.0 * t(j, i) * d_(j, i);
        d_(j, i) = 0.0;
        d_(i, j) = 0.0;
      }
      for (Eigen::Index k = i + 1; k < n; ++k) {
        const double v = d2_row(k);
        d_(i, k) = v;
        d_(k, i) = v;
        tr_td += 2.0 * t(i, k) * v;
      }

      const double e2 = std::exp(2.0 * l_(i));
      const double tr_tq = e * tr_ts + e2 * tr_td;
      const double quad = e2 * s_gamma.dot(w_s_gamma);
      out.hess_diag(i) = 0.5 * (tr_tq - 2.0 * quad + e2 * tr_uu);
    }

#ifndef NDEBUG
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        if ((j <= i) == (k <= i)) {
          assert(s_(j, k) == 0.0 || std::abs(s_(j, k)) < 1e-12 * (1.0 + s_.cwiseAbs().maxCoeff()));
        }
      }
    }
#endif

    if (observer) {
      const Eigen::MatrixXd dk = e * s_;
      Eigen::MatrixXd d2k = dk;
      if (with_hessian) {
        d2k += std::exp(2.0 * l_(i)) * d_;
      }
      observer(static_cast<int>(i), dk, d2k);
    }
  }
  return out;
}

Eigen::VectorXd grad_loglik_l(const TransformedLatent& x, const Dataset& data, const StationaryKernel& kernel) {
  DerivWorkspace ws(x, data, kernel);
  return ws.grad_loglik_l();
}

Eigen::VectorXd hess_diag_loglik_l(const TransformedLatent& x, const Dataset& data,
                                   const StationaryKernel& kernel) {
  DerivWorkspace ws(x, data, kernel);
  return ws.hess_diag_loglik_l();
}

namespace reference {

namespace {

// d K_jk / d tau_h for the stationary kernel entry K_jk = k(tau_j, tau_k).
double dk_dtau(const Eigen::VectorXd& tau, Eigen::Index j, Eigen::Index k, Eigen::Index h,
               const StationaryKernel& kernel) {
  if (j == k) {
    return 0.0;
  }
  if (h == j) {
    return kernel.d1(tau(j), tau(k));
  }
  if (h == k) {
    return -kernel.d1(tau(j), tau(k));
  }
  return 0.0;
}

// d^2 K_jk / d tau_h d tau_g.
double d2k_dtau2(const Eigen::VectorXd& tau, Eigen::Index j, Eigen::Index k, Eigen::Index h, Eigen::Index g,
                 const StationaryKernel& kernel) {
  if (j == k) {
    return 0.0;
  }
  const bool h_in = (h == j || h == k);
  const bool g_in = (g == j || g == k);
  if (!h_in || !g_in) {
    return 0.0;
  }
  if (h == g) {
    // Pure second derivative in either argument.
    return kernel.d2(tau(j), tau(k));
  }
  return kernel.d12(tau(j), tau(k));
}

}  // namespace

Eigen::MatrixXd dK_dl(const Eigen::VectorXd& tau, const Eigen::VectorXd& l, int i,
                      const StationaryKernel& kernel) {
  const auto n = tau.size();
  const double e = std::exp(l(i));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      double acc = 0.0;
      for (Eigen::Index h = 0; h <= i; ++h) {
        if (h == j || h == k) {
          acc += dk_dtau(tau, j, k, h, kernel) * e;
        }
      }
      out(j, k) = acc;
    }
  }
  return out;
}

Eigen::MatrixXd d2K_dl2(const Eigen::VectorXd& tau, const Eigen::VectorXd& l, int i,
                        const StationaryKernel& kernel) {
  const auto n = tau.size();
  const double e = std::exp(l(i));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (j == k) {
        continue;
      }
      double acc = 0.0;
      for (Eigen::Index h = 0; h <= i; ++h) {
        if (h != j && h != k) {
          continue;
        }
        // d^2 tau_h / dl_i^2 = exp(l_i), (d tau_h / dl_i)^2 = exp(2 l_i)
        acc += dk_dtau(tau, j, k, h, kernel) * e;
        for (Eigen::Index g = 0; g <= i; ++g) {
          if (g != j && g != k) {
            continue;
          }
          acc += d2k_dtau2(tau, j, k, h, g, kernel) * e * e;
        }
      }
      out(j, k) = acc;
    }
  }
  return out;
}

DerivWorkspace::Result derivatives(const TransformedLatent& x, const Dataset& data,
                                   const StationaryKernel& kernel) {
  const Eigen::VectorXd tau = tau_positions(x);
  const GPWorkspace gp = build_workspace(tau, data, kernel);
  const Eigen::MatrixXd w = gp.inverse();
  const Eigen::VectorXd& gamma = gp.gamma;
  const Eigen::MatrixXd t = gamma * gamma.transpose() - w;
  const auto gaps = x.l.size();

  DerivWorkspace::Result out;
  out.grad.resize(gaps);
  out.hess_diag.resize(gaps);
  for (Eigen::Index i = 0; i < gaps; ++i) {
    const Eigen::MatrixXd dk = dK_dl(tau, x.l, static_cast<int>(i), kernel);
    const Eigen::MatrixXd d2k = d2K_dl2(tau, x.l, static_cast<int>(i), kernel);
    out.grad(i) = 0.5 * (t * dk).trace();
    const Eigen::MatrixXd inv_grad = -w * dk * w;
    const Eigen::MatrixXd z = gamma * (inv_grad * data.y).transpose();
    const Eigen::MatrixXd dm = t * d2k + dk * (z + z.transpose() - inv_grad);
    out.hess_diag(i) = 0.5 * dm.trace();
  }
  return out;
}

}  // namespace reference

KernelEvalReport count_kernel_evals(int n, std::uint64_t seed) {
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument, "count_kernel_evals needs n >= 2");
  }
  Rng rng(seed);
  Dataset data;
  data.t.resize(n);
  data.sigma_t = Eigen::VectorXd::Constant(n, 1.0);
  data.y.resize(n);
  data.sigma_y = Eigen::VectorXd::Constant(n, 0.1);
  TransformedLatent x;
  x.l.resize(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    x.l(i) = std::log(0.2 + uniform01(rng));
  }
  x.r = 0.0;
  for (int i = 0; i < n; ++i) {
    data.y(i) = standard_normal(rng);
  }
  data.t = tau_positions(x);

  const Matern32Kernel base(KernelParams(1.0, 2.0));
  CountingKernel counting(base);
  KernelEvalReport report;
  report.n = n;

  DerivWorkspace ws(x, data, counting);
  counting.reset();
  (void)ws.sweep(true);
  report.recursion_d1 = counting.d1_calls();
  report.recursion_d2 = counting.d2_calls();

  counting.reset();
  const Eigen::VectorXd tau = tau_positions(x);
  for (int i = 0; i < n - 1; ++i) {
    (void)reference::dK_dl(tau, x.l, i, counting);
    (void)reference::d2K_dl2(tau, x.l, i, counting);
  }
  report.naive_d1 = counting.d1_calls();
  report.naive_d2 = counting.d2_calls();
  return report;
}

}  // namespace ordgp
