#pragma once

// Scalar numerical kernels shared by every module: cancellation-free
// exponential primitives, quadrature wrappers with power-law tail maps,
// and a bracketed Newton solver.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cbp/error.hpp"

namespace cbp::num {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

//! Shortest decimal string that round-trips to v.
inline std::string shortest(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

//---------------------------------------------------------------------------//
// Exponential primitives
//---------------------------------------------------------------------------//

//! e^{-y} - 1 + y without cancellation for small y.
inline double exp_neg_m1_plus(double y) {
  if (std::abs(y) < 0.1) {
    double term = 0.5 * y * y;
    double sum = term;
    for (int n = 3; n < 30; ++n) {
      term *= -y / n;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::expm1(-y) + y;
}

//! log(e^{-y} - 1 + y) given log y; finite for any log_y.
inline double log_exp_neg_m1_plus(double log_y) {
  if (log_y < -8.0) {
    double y = std::exp(log_y);
    // y^2/2 (1 - y/3 + y^2/12)
    return 2.0 * log_y - std::log(2.0) + std::log1p(-y / 3.0 + y * y / 12.0);
  }
  if (log_y > 3.0) {
    // y - 1 + e^{-y} = y (1 - (1 - e^{-y}) / y)
    double inv = std::exp(-log_y);
    return log_y + std::log1p(-inv * (1.0 - std::exp(-1.0 / inv)));
  }
  return std::log(exp_neg_m1_plus(std::exp(log_y)));
}

//! log(1 - e^{-a}) for a > 0.
inline double log1mexp(double a) {
  if (a <= 0) return -kInf;
  return a <= std::log(2.0) ? std::log(-std::expm1(-a))
                            : std::log1p(-std::exp(-a));
}

//! log(1 - exp(-e^{log_y})): the log of a survival probability whose
//! exponent is only known on a log scale.
inline double log_one_minus_exp_neg_exp(double log_y) {
  if (log_y == -kInf) return -kInf;
  if (log_y < -40.0) return log_y - 0.5 * std::exp(log_y);
  return log1mexp(std::exp(log_y));
}

//! 1 - e^{-y}.
inline double one_minus_exp_neg(double y) { return -std::expm1(-y); }

inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -kInf) return a;
  return a + std::log1p(std::exp(b - a));
}

//! log(1 + e^x).
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

//---------------------------------------------------------------------------//
// Quadrature
//---------------------------------------------------------------------------//

namespace detail {
inline void check_quadrature(double value, double error, double l1,
                             const char* what) {
  // Gauss-Kronrod and tanh-sinh error estimates are pessimistic; only flag
  // estimates that show the rule clearly did not settle.
  if (!std::isfinite(value) || error > 1e-6 * l1 + 1e-300) {
    throw Error(ErrorCode::quadrature_failure,
                std::string(what) + ": value=" + std::to_string(value) +
                    " error estimate=" + std::to_string(error));
  }
}

inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  static boost::math::quadrature::tanh_sinh<double> rule(15);
  return rule;
}
}  // namespace detail

//! Adaptive Gauss-Kronrod (21-point) on a finite interval.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol,
                 const char* what = "integrate") {
  if (a == b) return 0.0;
  double err = 0, l1 = 0;
  double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
      f, a, b, 15, rel_tol, &err, &l1);
  detail::check_quadrature(v, err, l1, what);
  return v;
}

//! Tanh-sinh on a finite interval; tolerates integrable endpoint
//! singularities.
template <class F>
double integrate_endpoint_singular(F&& f, double a, double b, double rel_tol,
                                   const char* what = "integrate") {
  if (a == b) return 0.0;
  double err = 0, l1 = 0;
  std::size_t levels = 0;
  double v = detail::tanh_sinh_rule().integrate(f, a, b, rel_tol, &err, &l1,
                                                &levels);
  detail::check_quadrature(v, err, l1, what);
  return v;
}

//! \int_a^\infty f(q) dq for an integrand decaying like e^{-rate q}.
//!
//! The substitution w = e^{-rate (q - a)} maps the tail onto (0, 1] and
//! turns an exact exponential tail into a constant; deviations from the
//! declared rate leave at most an integrable power at w = 0.
template <class F>
double integrate_upper_tail(F&& f, double a, double rate, double rel_tol,
                            const char* what = "upper tail") {
  auto mapped = [&](double w) {
    if (w <= 0) return 0.0;
    double q = a - std::log(w) / rate;
    double fq = f(q);
    return fq == 0.0 ? 0.0 : fq / (rate * w);
  };
  return integrate_endpoint_singular(mapped, 0.0, 1.0, rel_tol, what);
}

//! \int_{-\infty}^a f(q) dq for an integrand vanishing like e^{rate q}.
template <class F>
double integrate_lower_tail(F&& f, double a, double rate, double rel_tol,
                            const char* what = "lower tail") {
  auto mapped = [&](double w) {
    if (w <= 0) return 0.0;
    double q = a + std::log(w) / rate;
    double fq = f(q);
    return fq == 0.0 ? 0.0 : fq / (rate * w);
  };
  return integrate_endpoint_singular(mapped, 0.0, 1.0, rel_tol, what);
}

//---------------------------------------------------------------------------//
// Root finding
//---------------------------------------------------------------------------//

//! Safeguarded Newton iteration for a decreasing function.
//!
//! `g(x)` returns {value, derivative}; requires g(lo) >= 0 >= g(hi).
//! Falls back to bisection whenever the Newton step leaves the bracket.
template <class G>
double solve_decreasing(G&& g, double lo, double hi, double guess, double tol,
                        int max_iter = 300) {
  double x = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int iter = 0; iter < max_iter; ++iter) {
    auto [v, d] = g(x);
    if (v == 0.0) return x;
    if (v > 0)
      lo = x;
    else
      hi = x;
    double next = x - v / d;
    if (!std::isfinite(next) || next <= lo || next >= hi) {
      next = 0.5 * (lo + hi);
    }
    double step_tol = std::max(tol, 4 * kEps * std::abs(next));
    if (std::abs(next - x) <= step_tol || hi - lo <= step_tol) return next;
    x = next;
  }
  throw Error(ErrorCode::bracketing_failure,
              "root iteration did not converge in [" + std::to_string(lo) +
                  ", " + std::to_string(hi) + "]");
}

//! Central-difference log-log slope d log f / d log x at x = e^{log_x}.
template <class F>
double log_log_slope(F&& log_f_at_log, double log_x, double h = 1e-2) {
  return (log_f_at_log(log_x + h) - log_f_at_log(log_x - h)) / (2 * h);
}

}  // namespace cbp::num
