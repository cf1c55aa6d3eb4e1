#pragma once

#include <cmath>
#include <complex>
#include <variant>

#include "cbp/error.hpp"
#include "cbp/flow.hpp"
#include "cbp/invert.hpp"
#include "cbp/numerics.hpp"

namespace cbp {

namespace detail {
using cplx = std::complex<double>;

inline cplx expm1(cplx z) {
  if (std::abs(z) < 1e-3) return z * (1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0)));
  return std::exp(z) - 1.0;
}

inline cplx log1p(cplx z) {
  if (std::abs(z) < 1e-4) return z * (1.0 - z * (0.5 - z / 3.0));
  return std::log(1.0 + z);
}
}  // namespace detail

//---------------------------------------------------------------------------//
// Norming
//---------------------------------------------------------------------------//

struct FbarNorming {};
struct CustomNorming {
  double log_q;
};
struct AlphaZeroNorming {};

using Norming = std::variant<FbarNorming, CustomNorming, AlphaZeroNorming>;

inline Norming custom_norming(double q) {
  require(q > 0 && std::isfinite(q), "custom norming requires Q_t > 0");
  return CustomNorming{std::log(q)};
}

//! Q_t = t^{-1/alpha}
inline Norming power_norming(double t, double alpha) {
  require(t > 0 && alpha > 0, "power norming requires t, alpha > 0");
  return CustomNorming{-std::log(t) / alpha};
}

//---------------------------------------------------------------------------//
// Limit laws
//---------------------------------------------------------------------------//

//! h(theta) = 1 - (1 + (c theta)^{-alpha})^{-1/alpha}
struct LinnikType {
  double alpha;
  double c = 1.0;
};
//! (1 + theta^{-alpha})^{-1/alpha}
struct StationaryExcess {
  double alpha;
};
//! 1 / (1 + theta)
struct ExponentialUnit {};

class LimitLaw {
 public:
  using Variant = std::variant<LinnikType, StationaryExcess, ExponentialUnit>;

  explicit LimitLaw(Variant v) : v_(v) {
    if (auto const* l = std::get_if<LinnikType>(&v_))
      require(l->alpha > 0 && l->alpha <= 1 && l->c > 0,
              "LinnikType needs alpha in (0, 1] and c > 0");
    if (auto const* s = std::get_if<StationaryExcess>(&v_))
      require(s->alpha > 0 && s->alpha <= 1, "StationaryExcess needs alpha in (0, 1]");
  }

  //! Limit of the t^{-1/alpha}-normed law of a Stable(c, alpha) process.
  static LimitLaw power_normed_stable(double c, double alpha) {
    return LimitLaw(LinnikType{alpha, std::pow(c * alpha, 1.0 / alpha)});
  }

  Variant const& variant() const { return v_; }

  double lt(double theta) const {
    require(theta >= 0, "limit transform requires theta >= 0");
    if (theta == 0) return 1.0;
    return std::visit(
        [&](auto const& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LinnikType>) {
            double z = std::pow(m.c * theta, -m.alpha);
            return -std::expm1(-std::log1p(z) / m.alpha);
          } else if constexpr (std::is_same_v<T, StationaryExcess>) {
            return std::exp(-std::log1p(std::pow(theta, -m.alpha)) / m.alpha);
          } else {
            return 1.0 / (1.0 + theta);
          }
        },
        v_);
  }

  std::complex<double> lt(std::complex<double> s) const {
    using detail::cplx;
    return std::visit(
        [&](auto const& m) -> cplx {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LinnikType>) {
            cplx z = std::pow(m.c * s, -m.alpha);
            return -detail::expm1(-detail::log1p(z) / m.alpha);
          } else if constexpr (std::is_same_v<T, StationaryExcess>) {
            return std::exp(-detail::log1p(std::pow(s, -m.alpha)) / m.alpha);
          } else {
            return 1.0 / (1.0 + s);
          }
        },
        v_);
  }

  TransformHandle transform() const {
    LimitLaw self = *this;
    return {[self](double s) { return self.lt(s); },
            [self](std::complex<double> s) { return self.lt(s); }, 1.0};
  }

  double cdf(double y, InversionOptions const& opts = {}) const {
    require(y >= 0, "cdf requires y >= 0");
    if (y == 0) return 0.0;
    if (y == num::kInf) return 1.0;
    if (std::holds_alternative<ExponentialUnit>(v_)) return -std::expm1(-y);
    return invert_cdf(transform(), y, opts).value;
  }

 private:
  Variant v_;
};

inline double limit_lt(LimitLaw const& lim, double theta) { return lim.lt(theta); }

//---------------------------------------------------------------------------//
// Finite-t conditioned law
//---------------------------------------------------------------------------//

/*!
 * Law of Q_t X_t under P_x( . | tau > t). All transforms are assembled
 * from log u_t and log P_x(tau > t), so they stay exact when the survival
 * probability itself underflows.
 */
class ConditionalLaw {
 public:
  ConditionalLaw(CumulantFlow flow, double t, double x, Norming norming = FbarNorming{})
      : flow_(std::move(flow)), t_(t), x_(x), norming_(norming) {
    require(t > 0 && x > 0, "conditional law requires t, x > 0");
    log_b_ = flow_.log_survival(t_, x_);
    require(std::isfinite(log_b_), "survival probability is not representable even in log form",
            ErrorCode::underflow);
    if (std::holds_alternative<FbarNorming>(norming_)) {
      log_q_ = flow_.log_fbar(t_);
    } else if (auto const* c = std::get_if<CustomNorming>(&norming_)) {
      require(std::isfinite(c->log_q), "custom norming requires 0 < Q_t < inf");
      log_q_ = c->log_q;
    } else {
      log_q_ = std::numeric_limits<double>::quiet_NaN();
    }
  }

  CumulantFlow const& flow() const { return flow_; }
  double t() const { return t_; }
  double x() const { return x_; }
  Norming const& norming() const { return norming_; }
  double log_q() const {
    require_transform_norming();
    return log_q_;
  }
  double log_survival() const { return log_b_; }

  //! log(1 - E_x(e^{-theta Q X_t} | tau > t))
  double log_one_minus_lt(double theta) const {
    require(theta > 0, "conditioned transform requires theta > 0");
    require_transform_norming();
    return log_one_minus_lt_at_log(std::log(theta) + log_q_);
  }

  //! E_x(e^{-theta Q_t X_t} | tau > t)
  double conditioned_lt(double theta) const {
    if (theta == 0) return 1.0;
    return -std::expm1(log_one_minus_lt(theta));
  }

  std::complex<double> conditioned_lt(std::complex<double> s) const {
    require_transform_norming();
    return complex_lt(s * std::exp(log_q_));
  }

  //! E_x(Q_t X_t | tau > t) = Q_t x / P_x(tau > t)
  double conditioned_mean() const {
    require_transform_norming();
    return std::exp(log_q_ + std::log(x_) - log_b_);
  }

  //! P_x(Q_t X_t <= y | tau > t)
  double conditional_cdf(double y, InversionOptions const& opts = {}) const {
    require(y >= 0, "conditional cdf requires y >= 0");
    if (y == 0) return 0.0;
    if (y == num::kInf) return 1.0;
    return conditional_cdf_log(std::log(y), opts).value;
  }

  /*!
   * P_x(Q_t X_t <= e^{log_y} | tau > t); with AlphaZeroNorming Q_t = 1.
   * The variable is rescaled so the inversion always runs at argument 1.
   */
  InversionResult conditional_cdf_log(double log_y, InversionOptions const& opts = {}) const {
    double log_q = std::holds_alternative<AlphaZeroNorming>(norming_) ? 0.0 : log_q_;
    double shift = log_q - log_y;
    TransformHandle h;
    h.total_mass = 1.0;
    h.real = [this, shift](double s) {
      return -std::expm1(log_one_minus_lt_at_log(std::log(s) + shift));
    };
    if (flow_.mechanism().has_complex_flow())
      h.complex = [this, shift](std::complex<double> s) { return complex_lt(s * std::exp(shift)); };
    return invert_cdf(h, 1.0, opts);
  }

 private:
  void require_transform_norming() const {
    require(!std::holds_alternative<AlphaZeroNorming>(norming_),
            "the V/L norming has no transform in theta; use AlphaZeroScheme");
  }

  // argument is log(theta Q)
  double log_one_minus_lt_at_log(double log_lambda) const {
    double log_u = flow_.log_u(t_, log_lambda);
    double log_a = num::log_one_minus_exp_neg_exp(std::log(x_) + log_u);
    return log_a - log_b_;
  }

  // argument is theta Q
  std::complex<double> complex_lt(std::complex<double> lambda) const {
    auto u = flow_.u_complex(t_, lambda);
    auto a = -detail::expm1(-x_ * u);
    return 1.0 - a / std::exp(log_b_);
  }

  CumulantFlow flow_;
  double t_;
  double x_;
  Norming norming_;
  double log_q_;
  double log_b_;
};

//---------------------------------------------------------------------------//
// alpha = 0
//---------------------------------------------------------------------------//

/*!
 * Normalization for slowly varying psi(l) = l L(1/l):
 *
 *   V(x) = phi(1/x) = \int_0^x d xi / (xi L(xi)),   R = V^{-1} = 1 / varphi.
 */
class AlphaZeroScheme {
 public:
  static constexpr double kAlphaTolerance = 0.02;

  explicit AlphaZeroScheme(CumulantFlow flow) : flow_(std::move(flow)) {
    double a = flow_.mechanism().alpha();
    require(a < kAlphaTolerance,
            "mechanism has alpha = " + std::to_string(a) +
                "; use the conditional law with F-bar norming for alpha > 0");
  }

  CumulantFlow const& flow() const { return flow_; }

  double V(double x) const {
    require(x >= 0, "V requires x >= 0");
    if (x == 0) return 0.0;
    return V_at_log(std::log(x));
  }
  double V_at_log(double log_x) const { return flow_.phi_at_log(-log_x); }

  double R(double y) const { return std::exp(log_R(y)); }
  double log_R(double y) const {
    require(y > 0, "R requires y > 0");
    return -flow_.log_varphi(y);
  }

  double L(double z) const { return flow_.mechanism().slowly_varying(z); }
  double L_at_log(double log_z) const { return flow_.mechanism().slowly_varying_at_log(log_z); }

  //! log of the threshold R(y / L(1/F(t))) on X_t
  double log_threshold(double t, double y) const {
    double l = L_at_log(-flow_.log_fbar(t));
    return log_R(y / l);
  }

  //! P_x(L(1/F(t)) V(X_t) <= y | tau > t)
  double normalized_cdf(double t, double x, double y, InversionOptions const& opts = {}) const {
    require(t > 0 && x > 0 && y >= 0, "normalized cdf requires t, x > 0 and y >= 0");
    if (y == 0) return 0.0;
    if (y == num::kInf) return 1.0;
    ConditionalLaw law(flow_, t, x, AlphaZeroNorming{});
    return law.conditional_cdf_log(log_threshold(t, y), opts).value;
  }

  //! I(y, t) = \int_t^{t + y / L(R(t))} L(R(z)) dz
  double integral_I(double y, double t) const {
    require(t > 0, "integral_I requires t > 0");
    if (y == 0) return 0.0;
    auto LR = [&](double z) { return L_at_log(log_R(z)); };
    double upper = t + y / LR(t);
    require(upper > 0, "integral_I requires t + y / L(R(t)) > 0");
    return num::integrate(LR, t, upper, 1e-10, "I(y, t)");
  }

  //! V(1/F(t)) / t
  double timescale_ratio(double t) const {
    require(t > 0, "timescale ratio requires t > 0");
    return V_at_log(-flow_.log_fbar(t)) / t;
  }

 private:
  CumulantFlow flow_;
};

inline double alpha0_normalized_cdf(AlphaZeroScheme const& s, double t, double x, double y) {
  return s.normalized_cdf(t, x, y);
}

}  // namespace cbp
