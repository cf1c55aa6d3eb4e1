#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "cbp/error.hpp"
#include "cbp/mechanism.hpp"
#include "cbp/numerics.hpp"
#include "cbp/ode.hpp"

namespace cbp {

struct FlowTolerances {
  double quad_rel_tol = 1e-12;
  double root_tol = 1e-14;  //!< relative tolerance on varphi
  double ode_tol = 1e-10;
};

namespace detail {
//! phi(e^{-k step}) for k = 0, 1, ...; grows on demand, never shrinks.
struct PhiTable {
  std::mutex mutex;
  double step = 1.0;
  std::vector<double> nodes;
};
}  // namespace detail

/*!
 * Cumulant semigroup of a critical mechanism satisfying Grey's condition:
 *
 *   phi(z) = \int_z^\infty d xi / psi(xi),   varphi = phi^{-1},
 *   u_t(lambda) = varphi(t + phi(lambda)).
 *
 * Every quantity is also available on a log scale; survival probabilities
 * of mechanisms with slowly varying L underflow double precision long
 * before the interesting time range.
 */
class CumulantFlow {
 public:
  explicit CumulantFlow(BranchingMechanism mech, FlowTolerances tol = {})
      : mech_(std::move(mech)), tol_(tol), table_(std::make_shared<detail::PhiTable>()) {
    if (auto const* g = mech_.as<General>()) {
      require(g->triplet.diffusion() > 0 || g->triplet.has_jumps(),
              "b = 0 and Lambda = 0: psi is trivial", ErrorCode::trivial_mechanism);
    }
    auto cls = classify(mech_);
    require(cls.kind == Criticality::critical,
            "cumulant flow requires a critical mechanism, got " +
                std::string(to_string(cls.kind)),
            ErrorCode::not_critical);
    require(grey_condition(mech_), "\\int^inf d xi / psi(xi) diverges for " + mech_.name(),
            ErrorCode::grey_condition_fails);
    tail_rate_ = mech_.large_lambda_exponent() - 1.0;
  }

  BranchingMechanism const& mechanism() const { return mech_; }
  FlowTolerances const& tolerances() const { return tol_; }
  double rho() const { return 0.0; }

  //-------------------------------------------------------------------------//
  // phi and varphi
  //-------------------------------------------------------------------------//

  double phi(double z) const {
    require(z > 0, "phi requires z > 0");
    if (z == num::kInf) return 0.0;
    return phi_at_log(std::log(z));
  }

  //! phi(e^r)
  double phi_at_log(double r) const {
    if (r == num::kInf) return 0.0;
    if (r == -num::kInf) return num::kInf;
    if (auto const* s = mech_.as<Stable>())
      return std::exp(-s->alpha * r) / (s->c * s->alpha);
    if (auto const* q = mech_.as<Quadratic>()) return std::exp(-r) / q->b;
    if (auto const* rs = mech_.as<ReciprocalSum>())
      return std::exp(-rs->alpha * r) / rs->alpha + std::exp(-rs->beta * r) / rs->beta;
    return phi_quadrature(r);
  }

  //! d phi(e^r) / dr = -e^r / psi(e^r)
  double phi_log_derivative(double r) const {
    return -1.0 / mech_.psi_over_lambda_at_log(r);
  }

  double varphi(double t) const { return std::exp(log_varphi(t)); }

  //! log varphi(t); finite where varphi(t) itself underflows.
  double log_varphi(double t) const {
    require(t >= 0, "varphi requires t >= 0");
    if (t == 0) return num::kInf;
    if (t == num::kInf) return -num::kInf;
    if (auto const* s = mech_.as<Stable>())
      return -std::log(s->c * s->alpha * t) / s->alpha;
    if (auto const* q = mech_.as<Quadratic>()) return -std::log(q->b * t);
    return invert_phi(t);
  }

  //-------------------------------------------------------------------------//
  // u_t(lambda)
  //-------------------------------------------------------------------------//

  //! u_t(lambda); lambda = +inf gives varphi(t).
  double u(double t, double lambda) const {
    require(t >= 0 && lambda >= 0, "u requires t, lambda >= 0");
    if (lambda == 0) return 0.0;
    if (t == 0) return lambda;
    if (auto const* q = mech_.as<Quadratic>()) {
      if (lambda == num::kInf) return 1.0 / (q->b * t);
      return lambda / (1.0 + q->b * t * lambda);
    }
    return std::exp(log_u(t, std::log(lambda)));
  }

  //! log u_t(e^{log_lambda})
  double log_u(double t, double log_lambda) const {
    require(t >= 0, "u requires t >= 0");
    if (log_lambda == -num::kInf) return -num::kInf;
    if (t == 0) return log_lambda;
    if (log_lambda == num::kInf) return log_varphi(t);
    if (auto const* s = mech_.as<Stable>()) {
      double a = s->alpha;
      return -num::log_add_exp(-a * log_lambda, std::log(s->c * a * t)) / a;
    }
    if (auto const* q = mech_.as<Quadratic>()) {
      // lambda / (1 + b t lambda)
      return log_lambda - num::softplus(std::log(q->b * t) + log_lambda);
    }
    return log_varphi(t + phi_at_log(log_lambda));
  }

  //! Analytic continuation of u_t to Re(s) > 0 where it is elementary.
  std::complex<double> u_complex(double t, std::complex<double> s) const {
    require(mech_.has_complex_flow(), "complex u_t needs Stable or Quadratic");
    if (auto const* st = mech_.as<Stable>()) {
      double a = st->alpha;
      return std::pow(std::pow(s, -a) + st->c * a * t, -1.0 / a);
    }
    double b = mech_.as<Quadratic>()->b;
    return s / (1.0 + b * t * s);
  }

  //! Solves du/ds = -psi(u), u(0) = lambda; independent of phi/varphi.
  num::OdeResult u_ode(double t, double lambda) const {
    require(t >= 0 && lambda > 0 && std::isfinite(lambda),
            "u_ode requires t >= 0 and 0 < lambda < inf");
    num::OdeOptions opts;
    opts.rel_tol = tol_.ode_tol;
    return num::integrate_autonomous(
        [&](double y) { return y > 0 ? -mech_.psi(y) : 0.0; }, lambda, t, opts);
  }

  //! d u_t(lambda) / d lambda = psi(u_t(lambda)) / psi(lambda)
  double du_dlambda(double t, double lambda) const {
    require(lambda > 0 && std::isfinite(lambda), "du_dlambda requires 0 < lambda < inf");
    if (t == 0) return 1.0;
    return mech_.psi(u(t, lambda)) / mech_.psi(lambda);
  }

  //-------------------------------------------------------------------------//
  // Survival
  //-------------------------------------------------------------------------//

  //! P_x(tau > t) = 1 - exp(-x varphi(t))
  double survival(double t, double x) const {
    require(t > 0 && x > 0, "survival requires t, x > 0");
    return num::one_minus_exp_neg(x * varphi(t));
  }

  double log_survival(double t, double x) const {
    require(t > 0 && x > 0, "survival requires t, x > 0");
    return num::log_one_minus_exp_neg_exp(std::log(x) + log_varphi(t));
  }

  double fbar(double t) const { return survival(t, 1.0); }
  double log_fbar(double t) const { return log_survival(t, 1.0); }

  //! E_x X_t
  double mean(double t, double x) const {
    require(t >= 0 && x >= 0, "mean requires t, x >= 0");
    return x * std::exp(-rho() * t);
  }

 private:
  double integrand_at_log(double q) const { return 1.0 / mech_.psi_over_lambda_at_log(q); }

  double upper_tail_from(double r) const {
    return num::integrate_upper_tail([&](double q) { return integrand_at_log(q); }, r,
                                     tail_rate_, tol_.quad_rel_tol, "phi tail");
  }

  double phi_quadrature(double r) const {
    if (r >= 0) return upper_tail_from(r);
    auto& tab = *table_;
    auto k = static_cast<std::size_t>(std::ceil(-r / tab.step));
    double base;
    {
      std::lock_guard<std::mutex> lock(tab.mutex);
      extend_table(k);
      base = tab.nodes[k - 1];
    }
    double top = -static_cast<double>(k - 1) * tab.step;
    return base + num::integrate([&](double q) { return integrand_at_log(q); }, r, top,
                                 tol_.quad_rel_tol, "phi segment");
  }

  // caller holds the table mutex
  void extend_table(std::size_t k) const {
    constexpr std::size_t kMaxNodes = 2'000'000;
    auto& tab = *table_;
    if (k >= kMaxNodes)
      throw Error(ErrorCode::bracketing_failure,
                  "phi table would exceed " + std::to_string(kMaxNodes) + " nodes");
    if (tab.nodes.empty()) tab.nodes.push_back(upper_tail_from(0.0));
    while (tab.nodes.size() < k) {
      double top = -static_cast<double>(tab.nodes.size() - 1) * tab.step;
      double seg = num::integrate([&](double q) { return integrand_at_log(q); },
                                  top - tab.step, top, tol_.quad_rel_tol, "phi segment");
      tab.nodes.push_back(tab.nodes.back() + seg);
    }
  }

  //! log varphi(t): root in r of log phi(e^r) = log t.
  double invert_phi(double t) const {
    double log_t = std::log(t);
    auto G = [&](double r) { return std::log(phi_at_log(r)) - log_t; };

    double lo, hi, g_lo, g_hi;
    double g0 = G(0.0);
    if (g0 == 0) return 0.0;
    constexpr double kLimit = 4.0e6;
    if (g0 > 0) {
      lo = 0.0, g_lo = g0, hi = 1.0, g_hi = G(hi);
      while (g_hi > 0) {
        lo = hi, g_lo = g_hi, hi *= 2;
        if (hi > kLimit)
          throw Error(ErrorCode::bracketing_failure, "varphi(" + std::to_string(t) + ")");
        g_hi = G(hi);
      }
    } else {
      hi = 0.0, g_hi = g0, lo = -1.0, g_lo = G(lo);
      while (g_lo < 0) {
        hi = lo, g_hi = g_lo, lo *= 2;
        if (lo < -kLimit)
          throw Error(ErrorCode::bracketing_failure, "varphi(" + std::to_string(t) + ")");
        g_lo = G(lo);
      }
    }
    double guess = std::isfinite(g_hi) ? lo - g_lo * (hi - lo) / (g_hi - g_lo)
                                       : 0.5 * (lo + hi);
    auto g = [&](double r) {
      double p = phi_at_log(r);
      return std::pair{std::log(p) - log_t, phi_log_derivative(r) / p};
    };
    return num::solve_decreasing(g, lo, hi, guess, tol_.root_tol);
  }

  BranchingMechanism mech_;
  FlowTolerances tol_;
  std::shared_ptr<detail::PhiTable> table_;
  double tail_rate_ = 1.0;
};

}  // namespace cbp
