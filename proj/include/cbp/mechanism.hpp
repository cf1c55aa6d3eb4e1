#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cbp/error.hpp"
#include "cbp/numerics.hpp"

namespace cbp {

//---------------------------------------------------------------------------//
// Levy measures
//---------------------------------------------------------------------------//

enum class DensityKind { pareto, shifted_pareto, exponential };

/*!
 * Catalog density g for a Levy measure \Lambda(dx) = g(x) dx on (0, inf).
 *
 *  - pareto:          g(x) = k x^{-p},        2 < p < 3
 *  - shifted_pareto:  g(x) = k (1 + x)^{-p},  p > 2
 *  - exponential:     g(x) = k e^{-x/m},      m > 0  (`exponent` holds m)
 *
 * The power behaviour at zero and infinity is declared rather than
 * discovered so that measure integrals can treat both ends analytically.
 */
struct LevyDensity {
  DensityKind kind = DensityKind::shifted_pareto;
  double weight = 1.0;
  double exponent = 2.5;

  //! log g(e^q)
  double log_at_log(double q) const {
    switch (kind) {
      case DensityKind::pareto: return std::log(weight) - exponent * q;
      case DensityKind::shifted_pareto:
        return std::log(weight) - exponent * num::softplus(q);
      case DensityKind::exponential:
        return std::log(weight) - std::exp(q) / exponent;
    }
    return -num::kInf;
  }

  double operator()(double x) const { return std::exp(log_at_log(std::log(x))); }

  //! g(x) ~ x^{-p0} as x -> 0
  double exponent_at_zero() const {
    return kind == DensityKind::pareto ? exponent : 0.0;
  }

  //! g(x) ~ x^{-p} as x -> inf; infinite for exponentially light tails
  double tail_exponent() const {
    return kind == DensityKind::exponential ? num::kInf : exponent;
  }

  //! log of the length scale where g changes regime
  double log_scale() const {
    return kind == DensityKind::exponential ? std::log(exponent) : 0.0;
  }

  void validate() const {
    require(weight > 0, "Levy density weight must be positive");
    switch (kind) {
      case DensityKind::pareto:
        require(exponent > 2 && exponent < 3,
                "pareto Levy density needs exponent in (2, 3) for "
                "(x ^ x^2)-integrability");
        break;
      case DensityKind::shifted_pareto:
        require(exponent > 2,
                "shifted_pareto Levy density needs tail exponent > 2");
        break;
      case DensityKind::exponential:
        require(exponent > 0, "exponential Levy density needs a positive mean");
        break;
    }
  }
};

inline const char* to_string(DensityKind k) {
  switch (k) {
    case DensityKind::pareto: return "pareto";
    case DensityKind::shifted_pareto: return "shifted_pareto";
    case DensityKind::exponential: return "exponential";
  }
  return "?";
}

struct LevyAtom {
  double position;
  double mass;
};

/*!
 * Levy-Khintchine data (a, b, Lambda) of a branching mechanism
 *
 *   psi(l) = a l + b l^2 + \int (e^{-l x} - 1 + l x) Lambda(dx).
 */
class LevyTriplet {
 public:
  using Measure = std::variant<std::monostate, LevyDensity, std::vector<LevyAtom>>;

  LevyTriplet(double drift, double diffusion, Measure measure = {})
      : drift_(drift), diffusion_(diffusion), measure_(std::move(measure)) {
    require(std::isfinite(drift_), "drift must be finite");
    require(diffusion_ >= 0 && std::isfinite(diffusion_),
            "diffusion coefficient b must be >= 0");
    if (auto const* d = density()) d->validate();
    for (auto const& a : atoms()) {
      require(a.position > 0 && std::isfinite(a.position),
              "Levy atoms must sit in (0, inf)");
      require(a.mass >= 0 && std::isfinite(a.mass),
              "Levy atom masses must be >= 0");
    }
    double integ = integrability();
    require(std::isfinite(integ),
            "Levy measure fails the (x ^ x^2)-integrability condition");
  }

  //! Measure matching psi = c l^{1+alpha} exactly (0 < alpha < 1).
  static LevyTriplet stable_equivalent(double c, double alpha) {
    require(c > 0 && alpha > 0 && alpha < 1,
            "stable-equivalent measure needs c > 0 and alpha in (0, 1)");
    double k = c * alpha * (1 + alpha) / std::tgamma(1 - alpha);
    return LevyTriplet(0.0, 0.0,
                       LevyDensity{DensityKind::pareto, k, 2.0 + alpha});
  }

  double drift() const { return drift_; }
  double diffusion() const { return diffusion_; }
  Measure const& measure() const { return measure_; }

  LevyDensity const* density() const {
    return std::get_if<LevyDensity>(&measure_);
  }
  std::vector<LevyAtom> const& atoms() const {
    static const std::vector<LevyAtom> none;
    auto const* a = std::get_if<std::vector<LevyAtom>>(&measure_);
    return a ? *a : none;
  }

  bool has_jumps() const {
    if (density()) return true;
    for (auto const& a : atoms())
      if (a.mass > 0) return true;
    return false;
  }

  //! \int (x ^ x^2) Lambda(dx)
  double integrability(double rel_tol = 1e-10) const {
    double total = 0;
    for (auto const& a : atoms())
      total += a.mass * std::min(a.position, a.position * a.position);
    if (auto const* d = density()) {
      auto near = [&](double q) { return std::exp(3 * q + d->log_at_log(q)); };
      auto far = [&](double q) { return std::exp(2 * q + d->log_at_log(q)); };
      double lo_rate = 3 - d->exponent_at_zero();
      double hi_rate = d->tail_exponent() - 2;
      if (!(lo_rate > 0) || !(hi_rate > 0)) return num::kInf;
      if (!std::isfinite(hi_rate)) hi_rate = 1.0;
      double split = std::max(0.0, d->log_scale());
      total += num::integrate_lower_tail(near, -10.0, lo_rate, rel_tol) +
               num::integrate(near, -10.0, 0.0, rel_tol) +
               num::integrate(far, 0.0, split + 10.0, rel_tol) +
               num::integrate_upper_tail(far, split + 10.0, hi_rate, rel_tol);
    }
    return total;
  }

  /*!
   * \int kernel(x) Lambda(dx) for the density part, evaluated on the log
   * scale q = log x with analytic power-law tail maps.
   *
   * `log_kernel(q)` is log kernel(e^q); the kernel behaves like x^{k0}
   * at zero and x^{kinf} at infinity (pass -inf for exponential damping).
   * `focus` is the log-location where the kernel changes regime.
   */
  template <class LogKernel>
  double density_integral(LogKernel&& log_kernel, double k0, double kinf,
                          double focus, double rel_tol) const {
    auto const* d = density();
    if (!d) return 0.0;
    auto f = [&](double q) {
      return std::exp(log_kernel(q) + d->log_at_log(q) + q);
    };
    double lo_rate = k0 + 1 - d->exponent_at_zero();
    double hi_rate = d->tail_exponent() - kinf - 1;
    if (!std::isfinite(hi_rate)) hi_rate = 1.0;
    require(lo_rate > 0 && hi_rate > 0,
            "kernel not integrable against the Levy density",
            ErrorCode::quadrature_failure);
    double lo = std::min(focus, d->log_scale()) - 10.0;
    double hi = std::max(focus, d->log_scale()) + 10.0;
    return num::integrate_lower_tail(f, lo, lo_rate, rel_tol, "levy lower tail") +
           num::integrate(f, lo, hi, rel_tol, "levy body") +
           num::integrate_upper_tail(f, hi, hi_rate, rel_tol, "levy upper tail");
  }

 private:
  double drift_;
  double diffusion_;
  Measure measure_;
};

//---------------------------------------------------------------------------//
// Mechanism variants
//---------------------------------------------------------------------------//

//! psi = c l^{1+alpha}
struct Stable {
  double c;
  double alpha;
};
//! psi = l^{1+beta} + l^{1+gamma}, 0 < gamma < beta <= 1
struct StableSum {
  double beta;
  double gamma;
};
//! psi = l (l^{-alpha} + l^{-beta})^{-1}, 0 < beta < alpha <= 1
struct ReciprocalSum {
  double alpha;
  double beta;
};
//! psi = l log^{-beta}(1 + 1/l), 0 < beta <= 1
struct LogBernstein {
  double beta;
};
//! psi = b l^2 (Feller diffusion)
struct Quadratic {
  double b;
};
struct General {
  LevyTriplet triplet;
};

struct PsiDerivatives {
  double first;
  double second;
};

enum class Criticality { subcritical, critical, supercritical };

inline const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "supercritical";
  }
  return "?";
}

struct Classification {
  Criticality kind;
  double rho;  //!< psi'(0+)
};

namespace detail {
struct GeneralCache {
  std::once_flag alpha_once;
  std::optional<double> alpha;
  std::once_flag exponent_once;
  double large_exponent = 0;
};
}  // namespace detail

/*!
 * A branching mechanism psi: closed-form example families or a general
 * Levy triplet. Values are immutable; every member is safe to call
 * concurrently.
 */
class BranchingMechanism {
 public:
  using Variant =
      std::variant<Stable, StableSum, ReciprocalSum, LogBernstein, Quadratic, General>;

  explicit BranchingMechanism(Variant v) : v_(std::move(v)) {
    std::visit([](auto const& m) { validate(m); }, v_);
    if (is_general()) cache_ = std::make_shared<detail::GeneralCache>();
  }

  static BranchingMechanism stable(double c, double alpha) {
    return BranchingMechanism(Stable{c, alpha});
  }
  static BranchingMechanism stable_sum(double beta, double gamma) {
    return BranchingMechanism(StableSum{beta, gamma});
  }
  static BranchingMechanism reciprocal_sum(double alpha, double beta) {
    return BranchingMechanism(ReciprocalSum{alpha, beta});
  }
  static BranchingMechanism log_bernstein(double beta) {
    return BranchingMechanism(LogBernstein{beta});
  }
  static BranchingMechanism quadratic(double b) {
    return BranchingMechanism(Quadratic{b});
  }
  static BranchingMechanism general(LevyTriplet t) {
    return BranchingMechanism(General{std::move(t)});
  }

  Variant const& variant() const { return v_; }
  template <class T>
  T const* as() const {
    return std::get_if<T>(&v_);
  }
  bool is_general() const { return std::holds_alternative<General>(v_); }

  //! phi and varphi are elementary for these variants.
  bool has_closed_form_phi() const {
    return std::holds_alternative<Stable>(v_) ||
           std::holds_alternative<Quadratic>(v_) ||
           std::holds_alternative<ReciprocalSum>(v_);
  }

  //! u_t(lambda) admits an elementary continuation to complex lambda.
  bool has_complex_flow() const {
    return std::holds_alternative<Stable>(v_) ||
           std::holds_alternative<Quadratic>(v_);
  }

  std::string name() const;

  double psi(double lambda) const {
    require(lambda >= 0, "psi requires lambda >= 0");
    if (lambda == 0) return 0.0;
    if (lambda == num::kInf) return num::kInf;
    return std::visit([&](auto const& m) { return psi_impl(m, lambda); }, v_);
  }

  PsiDerivatives derivatives(double lambda) const {
    require(lambda > 0 && std::isfinite(lambda),
            "psi derivatives require 0 < lambda < inf");
    return std::visit([&](auto const& m) { return deriv_impl(m, lambda); }, v_);
  }

  //! psi(e^r) / e^r, finite even where e^r underflows.
  double psi_over_lambda_at_log(double r) const {
    return std::visit(
        [&](auto const& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Stable>) {
            return m.c * std::exp(m.alpha * r);
          } else if constexpr (std::is_same_v<T, StableSum>) {
            return std::exp(m.beta * r) + std::exp(m.gamma * r);
          } else if constexpr (std::is_same_v<T, ReciprocalSum>) {
            return std::exp(-num::log_add_exp(-m.alpha * r, -m.beta * r));
          } else if constexpr (std::is_same_v<T, LogBernstein>) {
            return std::pow(num::softplus(-r), -m.beta);
          } else if constexpr (std::is_same_v<T, Quadratic>) {
            return m.b * std::exp(r);
          } else {
            // a + b l + \int (e^{-l x} - 1 + l x) / l Lambda(dx), on the log scale
            auto const& tr = m.triplet;
            double l = std::exp(r);
            if (l == num::kInf) return num::kInf;
            double v = tr.drift() + tr.diffusion() * l;
            for (auto const& a : tr.atoms())
              v += a.mass * std::exp(num::log_exp_neg_m1_plus(r + std::log(a.position)) - r);
            v += tr.density_integral(
                [&](double q) { return num::log_exp_neg_m1_plus(r + q) - r; }, 2.0, 1.0, -r,
                1e-12);
            return v;
          }
        },
        v_);
  }

  //! Declared alpha for closed forms (psi in R_{1+alpha}(0)).
  std::optional<double> declared_alpha() const {
    return std::visit(
        [](auto const& m) -> std::optional<double> {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Stable>) return m.alpha;
          else if constexpr (std::is_same_v<T, StableSum>) return m.gamma;
          else if constexpr (std::is_same_v<T, ReciprocalSum>) return m.alpha;
          else if constexpr (std::is_same_v<T, LogBernstein>) return 0.0;
          else if constexpr (std::is_same_v<T, Quadratic>) return 1.0;
          else return std::nullopt;
        },
        v_);
  }

  //! Exponent p with psi(l) ~ l^p as l -> inf (estimated for General).
  double large_lambda_exponent() const;

  //! L(e^{log_z}) where psi(l) = l^{1+alpha} L(1/l).
  double slowly_varying_at_log(double log_z) const;
  double slowly_varying(double z) const {
    return slowly_varying_at_log(std::log(z));
  }

  //! rv index at zero, cached for General mechanisms.
  double alpha() const;

 private:
  static void validate(Stable const& m) {
    require(m.c > 0, "Stable needs c > 0");
    require(m.alpha > 0 && m.alpha <= 1, "Stable needs alpha in (0, 1]");
  }
  static void validate(StableSum const& m) {
    require(m.gamma > 0 && m.gamma < m.beta && m.beta <= 1,
            "StableSum needs 0 < gamma < beta <= 1");
  }
  static void validate(ReciprocalSum const& m) {
    require(m.beta > 0 && m.beta < m.alpha && m.alpha <= 1,
            "ReciprocalSum needs 0 < beta < alpha <= 1");
  }
  static void validate(LogBernstein const& m) {
    require(m.beta > 0 && m.beta <= 1, "LogBernstein needs beta in (0, 1]");
  }
  static void validate(Quadratic const& m) {
    require(m.b > 0, "Quadratic needs b > 0");
  }
  static void validate(General const&) {}

  static double psi_impl(Stable const& m, double l) {
    return m.c * std::pow(l, 1 + m.alpha);
  }
  static double psi_impl(StableSum const& m, double l) {
    return std::pow(l, 1 + m.beta) + std::pow(l, 1 + m.gamma);
  }
  static double psi_impl(ReciprocalSum const& m, double l) {
    return l / (std::pow(l, -m.alpha) + std::pow(l, -m.beta));
  }
  static double psi_impl(LogBernstein const& m, double l) {
    return l * std::pow(std::log1p(1 / l), -m.beta);
  }
  static double psi_impl(Quadratic const& m, double l) { return m.b * l * l; }
  static double psi_impl(General const& m, double l) {
    auto const& tr = m.triplet;
    double v = tr.drift() * l + tr.diffusion() * l * l;
    for (auto const& a : tr.atoms())
      v += a.mass * num::exp_neg_m1_plus(l * a.position);
    double log_l = std::log(l);
    v += tr.density_integral(
        [&](double q) { return num::log_exp_neg_m1_plus(log_l + q); }, 2.0, 1.0,
        -log_l, 1e-12);
    return v;
  }

  static PsiDerivatives deriv_impl(Stable const& m, double l) {
    return {m.c * (1 + m.alpha) * std::pow(l, m.alpha),
            m.c * (1 + m.alpha) * m.alpha * std::pow(l, m.alpha - 1)};
  }
  static PsiDerivatives deriv_impl(StableSum const& m, double l) {
    return {(1 + m.beta) * std::pow(l, m.beta) + (1 + m.gamma) * std::pow(l, m.gamma),
            (1 + m.beta) * m.beta * std::pow(l, m.beta - 1) +
                (1 + m.gamma) * m.gamma * std::pow(l, m.gamma - 1)};
  }
  static PsiDerivatives deriv_impl(ReciprocalSum const& m, double l) {
    // psi = N / M with N = l^{1+alpha}, M = 1 + l^{alpha-beta}
    double d = m.alpha - m.beta;
    double n0 = std::pow(l, 1 + m.alpha);
    double n1 = (1 + m.alpha) * std::pow(l, m.alpha);
    double n2 = (1 + m.alpha) * m.alpha * std::pow(l, m.alpha - 1);
    double ld = std::pow(l, d);
    double m0 = 1 + ld;
    double m1 = d * ld / l;
    double m2 = d * (d - 1) * ld / (l * l);
    double first = n1 / m0 - n0 * m1 / (m0 * m0);
    double second = n2 / m0 - 2 * n1 * m1 / (m0 * m0) - n0 * m2 / (m0 * m0) +
                    2 * n0 * m1 * m1 / (m0 * m0 * m0);
    return {first, second};
  }
  static PsiDerivatives deriv_impl(LogBernstein const& m, double l) {
    double ell = std::log1p(1 / l);
    double b = m.beta;
    double first = std::pow(ell, -b) + b * std::pow(ell, -b - 1) / (l + 1);
    double second =
        b * std::pow(ell, -b - 2) * (ell + b + 1) / (l * (l + 1) * (l + 1));
    return {first, second};
  }
  static PsiDerivatives deriv_impl(Quadratic const& m, double l) {
    return {2 * m.b * l, 2 * m.b};
  }
  static PsiDerivatives deriv_impl(General const& m, double l) {
    auto const& tr = m.triplet;
    double first = tr.drift() + 2 * tr.diffusion() * l;
    double second = 2 * tr.diffusion();
    for (auto const& a : tr.atoms()) {
      first += a.mass * a.position * num::one_minus_exp_neg(l * a.position);
      second += a.mass * a.position * a.position * std::exp(-l * a.position);
    }
    double log_l = std::log(l);
    first += tr.density_integral(
        [&](double q) {
          return q + num::log_one_minus_exp_neg_exp(log_l + q);
        },
        2.0, 1.0, -log_l, 1e-12);
    second += tr.density_integral(
        [&](double q) { return 2 * q - l * std::exp(q); }, 2.0, -num::kInf,
        -log_l, 1e-12);
    return {first, second};
  }

  Variant v_;
  std::shared_ptr<detail::GeneralCache> cache_;
};

//---------------------------------------------------------------------------//
// Free operations
//---------------------------------------------------------------------------//

inline double psi_eval(BranchingMechanism const& m, double lambda) {
  return m.psi(lambda);
}

inline PsiDerivatives psi_derivatives(BranchingMechanism const& m, double lambda) {
  return m.derivatives(lambda);
}

/*!
 * Classify by the sign of rho = psi'(0+).
 *
 * Closed forms are critical by construction. General mechanisms estimate
 * the limit of psi(l)/l on l_k = 2^{-k}, k <= 40, with Aitken acceleration,
 * and refuse to guess when the accelerated sequence has not settled.
 */
inline Classification classify(BranchingMechanism const& m) {
  auto const* g = m.as<General>();
  if (!g) return {Criticality::critical, 0.0};

  constexpr int kMax = 40;
  std::vector<double> s(kMax + 1);
  for (int k = 0; k <= kMax; ++k) {
    double l = std::ldexp(1.0, -k);
    s[k] = m.psi(l) / l;
  }
  auto aitken = [&](int k) {
    double s0 = s[k - 2], s1 = s[k - 1], s2 = s[k];
    double denom = s2 - 2 * s1 + s0;
    if (denom == 0) return s2;
    return s2 - (s2 - s1) * (s2 - s1) / denom;
  };
  double rho = aitken(kMax);
  double prev = aitken(kMax - 1);
  double scale = std::max(1.0, std::abs(s[0]));
  double tol = 1e-8 * scale;
  if (std::abs(rho - prev) > 10 * tol && std::abs(s[kMax] - rho) > 10 * tol) {
    throw Error(ErrorCode::indeterminate,
                "psi(l)/l has not converged at l = 2^-40 (last estimates " +
                    std::to_string(prev) + ", " + std::to_string(rho) + ")");
  }
  if (std::abs(rho) <= tol) return {Criticality::critical, 0.0};
  return {rho > 0 ? Criticality::subcritical : Criticality::supercritical, rho};
}

//! E_x X_t = x e^{-rho t}
inline double mean(BranchingMechanism const& m, double t, double x) {
  require(t >= 0 && x >= 0, "mean needs t, x >= 0");
  return x * std::exp(-classify(m).rho * t);
}

namespace detail {
//! Per-decade increments of \int_1^{10^k} d xi / psi(xi).
inline std::vector<double> truncated_grey_increments(BranchingMechanism const& m,
                                                     int decades) {
  std::vector<double> inc;
  auto f = [&](double q) { return 1.0 / m.psi_over_lambda_at_log(q); };
  double step = std::log(10.0);
  for (int k = 0; k < decades; ++k)
    inc.push_back(num::integrate(f, k * step, (k + 1) * step, 1e-10, "grey"));
  return inc;
}
}  // namespace detail

/*!
 * Grey's condition: \int^\infty d xi / psi(xi) < inf.
 *
 * Decided by the large-lambda growth exponent. When that exponent is
 * within 0.02 of 1 the tail integral is truncated at successive decades:
 * constant per-decade increments mean divergence, geometric decay means
 * convergence, anything else is a boundary case.
 */
inline bool grey_condition(BranchingMechanism const& m) {
  auto cls = classify(m);
  require(cls.kind != Criticality::supercritical,
          "Grey's condition is only defined for (sub)critical mechanisms");
  double p = m.large_lambda_exponent();
  constexpr double kTol = 0.02;
  if (p > 1 + kTol) return true;
  if (p < 1 - kTol) return false;

  auto inc = detail::truncated_grey_increments(m, 12);
  double r1 = inc[10] / inc[9];
  double r2 = inc[11] / inc[10];
  if (r1 > 0.95 && r2 > 0.95) return false;
  if (r1 < 0.5 && r2 < 0.5) return true;
  throw Error(ErrorCode::boundary_case,
              "growth exponent " + std::to_string(p) +
                  " is within tolerance of 1 and truncated integrals are "
                  "inconclusive");
}

/*!
 * Index alpha with psi in R_{1+alpha}(0).
 *
 * Declared exactly for closed forms. For General mechanisms the local
 * index log2(psi(2s)/psi(s)) - 1 is computed for s = 2^{-k}, k <= 40, and
 * Aitken-extrapolated.
 */
inline double rv_index_at_zero(BranchingMechanism const& m) {
  if (auto a = m.declared_alpha()) return *a;
  auto const& tr = m.as<General>()->triplet;
  require(tr.diffusion() > 0 || tr.has_jumps(),
          "b = 0 and Lambda = 0: psi is trivial", ErrorCode::trivial_mechanism);
  require(classify(m).kind == Criticality::critical,
          "rv index at zero requires a critical mechanism",
          ErrorCode::not_critical);

  constexpr int kMin = 10, kMax = 40;
  std::vector<double> a;
  double prev_psi = m.psi(std::ldexp(1.0, -kMin));
  for (int k = kMin + 1; k <= kMax; ++k) {
    double cur = m.psi(std::ldexp(1.0, -k));
    a.push_back(std::log2(prev_psi / cur) - 1.0);
    prev_psi = cur;
  }
  auto aitken = [&](std::size_t k) {
    double s0 = a[k - 2], s1 = a[k - 1], s2 = a[k];
    double denom = s2 - 2 * s1 + s0;
    if (std::abs(denom) < 1e-14) return s2;
    return s2 - (s2 - s1) * (s2 - s1) / denom;
  };
  std::size_t n = a.size() - 1;
  double est = aitken(n);
  double prev = aitken(n - 1);
  if (!std::isfinite(est) || std::abs(est - prev) > 1e-3) {
    throw Error(ErrorCode::not_regularly_varying,
                "local index sequence did not settle (" + std::to_string(prev) +
                    " vs " + std::to_string(est) + ")");
  }
  if (est < -0.05 || est > 1.05) {
    throw Error(ErrorCode::not_regularly_varying,
                "estimated alpha " + std::to_string(est) + " outside [0, 1]");
  }
  return std::clamp(est, 0.0, 1.0);
}

//---------------------------------------------------------------------------//
// Out-of-line members
//---------------------------------------------------------------------------//

inline double BranchingMechanism::large_lambda_exponent() const {
  return std::visit(
      [&](auto const& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Stable>) return 1 + m.alpha;
        else if constexpr (std::is_same_v<T, StableSum>) return 1 + m.beta;
        else if constexpr (std::is_same_v<T, ReciprocalSum>) return 1 + m.beta;
        else if constexpr (std::is_same_v<T, LogBernstein>) return 1 + m.beta;
        else if constexpr (std::is_same_v<T, Quadratic>) return 2.0;
        else {
          std::call_once(cache_->exponent_once, [&] {
            if (m.triplet.diffusion() > 0) {
              cache_->large_exponent = 2.0;
              return;
            }
            auto log_psi = [&](double r) { return std::log(psi(std::exp(r))); };
            cache_->large_exponent =
                num::log_log_slope(log_psi, std::log(1e12), 0.5);
          });
          return cache_->large_exponent;
        }
      },
      v_);
}

inline double BranchingMechanism::alpha() const {
  if (auto a = declared_alpha()) return *a;
  std::call_once(cache_->alpha_once,
                 [&] { cache_->alpha = rv_index_at_zero(*this); });
  return *cache_->alpha;
}

inline double BranchingMechanism::slowly_varying_at_log(double log_z) const {
  return std::visit(
      [&](auto const& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Stable>) return m.c;
        else if constexpr (std::is_same_v<T, StableSum>)
          return 1 + std::exp((m.gamma - m.beta) * log_z);
        else if constexpr (std::is_same_v<T, ReciprocalSum>)
          return 1 / (1 + std::exp((m.beta - m.alpha) * log_z));
        else if constexpr (std::is_same_v<T, LogBernstein>)
          return std::pow(num::softplus(log_z), -m.beta);
        else if constexpr (std::is_same_v<T, Quadratic>) return m.b;
        else {
          // L(z) = psi(1/z) z^{1+alpha}
          double a = alpha();
          return psi_over_lambda_at_log(-log_z) * std::exp(a * log_z);
        }
      },
      v_);
}

inline std::string BranchingMechanism::name() const {
  std::ostringstream os;
  auto f = [](double v) { return num::shortest(v); };
  std::visit(
      [&](auto const& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Stable>)
          os << "Stable(c=" << f(m.c) << ", alpha=" << f(m.alpha) << ")";
        else if constexpr (std::is_same_v<T, StableSum>)
          os << "StableSum(beta=" << f(m.beta) << ", gamma=" << f(m.gamma) << ")";
        else if constexpr (std::is_same_v<T, ReciprocalSum>)
          os << "ReciprocalSum(alpha=" << f(m.alpha) << ", beta=" << f(m.beta) << ")";
        else if constexpr (std::is_same_v<T, LogBernstein>)
          os << "LogBernstein(beta=" << f(m.beta) << ")";
        else if constexpr (std::is_same_v<T, Quadratic>)
          os << "Quadratic(b=" << f(m.b) << ")";
        else {
          auto const& tr = m.triplet;
          os << "General(a=" << tr.drift() << ", b=" << tr.diffusion();
          if (auto const* d = tr.density())
            os << ", density=" << to_string(d->kind) << "(k=" << f(d->weight)
               << ", p=" << f(d->exponent) << ")";
          if (!tr.atoms().empty()) os << ", atoms=" << tr.atoms().size();
          os << ")";
        }
      },
      v_);
  return os.str();
}

}  // namespace cbp
