#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "cbp/error.hpp"
#include "cbp/flow.hpp"
#include "cbp/mechanism.hpp"
#include "cbp/numerics.hpp"

namespace cbp {

enum class Endpoint { zero, infinity };

struct IndexEstimate {
  double index = 0;
  double standard_error = 0;  //!< drift between the last two local slopes
  int grid_decades = 0;
  bool converged = false;
  double global_fit = 0;             //!< least-squares slope over the whole grid
  std::vector<double> local_slopes;  //!< one per grid interval
};

struct IndexOptions {
  double drift_threshold = 1e-3;
};

/*!
 * Index p of f in R_p at zero or infinity from a geometric grid.
 *
 * Secant slopes of log f between consecutive grid points behave like
 * p + c / |log t| + ... for f = t^p log^k t, so the last two slopes are
 * extrapolated linearly in 1 / |log t| to |log t| = infinity.
 *
 * `log_f` returns log f, which keeps underflowing tails usable.
 */
template <class LogF>
IndexEstimate estimate_index_on_grid(LogF&& log_f, std::vector<double> const& grid, Endpoint at,
                                     IndexOptions const& opts = {}) {
  require(grid.size() >= 3, "index estimation needs at least three grid points");
  std::vector<double> lt, lf;
  for (double t : grid) {
    require(t > 0 && std::isfinite(t), "index grid must be positive");
    lt.push_back(std::log(t));
    double v = log_f(t);
    require(std::isfinite(v), "f must be positive and finite on the grid");
    lf.push_back(v);
  }
  // order from the interior towards the endpoint
  if ((at == Endpoint::infinity) != (lt.back() > lt.front())) {
    std::reverse(lt.begin(), lt.end());
    std::reverse(lf.begin(), lf.end());
  }

  IndexEstimate est;
  std::vector<double> x;
  for (std::size_t i = 0; i + 1 < lt.size(); ++i) {
    est.local_slopes.push_back((lf[i + 1] - lf[i]) / (lt[i + 1] - lt[i]));
    x.push_back(1.0 / std::abs(0.5 * (lt[i] + lt[i + 1])));
  }
  std::size_t n = est.local_slopes.size() - 1;
  double s1 = est.local_slopes[n], s0 = est.local_slopes[n - 1];
  est.index = s1 - x[n] * (s1 - s0) / (x[n] - x[n - 1]);
  est.standard_error = std::abs(s1 - s0);
  est.converged = est.standard_error < opts.drift_threshold;
  est.grid_decades =
      static_cast<int>(std::lround(std::abs(lt.back() - lt.front()) / std::log(10.0)));

  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lt.size(); ++i) mx += lt[i], my += lf[i];
  mx /= lt.size(), my /= lt.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lt.size(); ++i) {
    sxy += (lt[i] - mx) * (lf[i] - my);
    sxx += (lt[i] - mx) * (lt[i] - mx);
  }
  est.global_fit = sxy / sxx;
  return est;
}

//! Default grids: [1e2, 1e2+decades] at infinity, [1e-2-decades, 1e-2] at zero.
inline std::vector<double> decade_grid(Endpoint at, int decades, int per_decade = 1) {
  require(decades >= 3, "index estimation needs at least three decades");
  std::vector<double> g;
  for (int k = 0; k <= decades * per_decade; ++k) {
    double e = static_cast<double>(k) / per_decade;
    g.push_back(at == Endpoint::infinity ? std::pow(10.0, 2 + e) : std::pow(10.0, -2 - e));
  }
  return g;
}

template <class LogF>
IndexEstimate estimate_log_index(LogF&& log_f, Endpoint at, int decades,
                                 IndexOptions const& opts = {}) {
  return estimate_index_on_grid(log_f, decade_grid(at, decades), at, opts);
}

//! Same as estimate_log_index for a positive f given directly.
template <class F>
IndexEstimate estimate_index(F&& f, Endpoint at, int decades, IndexOptions const& opts = {}) {
  return estimate_log_index(
      [&](double t) {
        double v = f(t);
        require(v > 0, "f must be positive on the grid (f(" + std::to_string(t) +
                           ") = " + std::to_string(v) + ")");
        return std::log(v);
      },
      at, decades, opts);
}

enum class Variation { slowly_varying, regularly_varying, undecided };

inline const char* to_string(Variation v) {
  switch (v) {
    case Variation::slowly_varying: return "slowly varying";
    case Variation::regularly_varying: return "regularly varying";
    case Variation::undecided: return "undecided";
  }
  return "?";
}

//! Slowly varying iff |index| < 0.02 with a converged estimate.
inline Variation classify_variation(IndexEstimate const& e, double threshold = 0.02) {
  if (!e.converged) return Variation::undecided;
  return std::abs(e.index) < threshold ? Variation::slowly_varying
                                       : Variation::regularly_varying;
}

//---------------------------------------------------------------------------//
// Karamata-type checks on the flow
//---------------------------------------------------------------------------//

struct DeltaGrowth {
  std::vector<double> t;
  std::vector<double> log_upper;  //!< log t^{1/alpha + delta} F(t)
  std::vector<double> log_lower;  //!< log t^{1/alpha - delta} F(t)
};

inline DeltaGrowth delta_growth_check(CumulantFlow const& flow, double alpha, double delta,
                                      std::vector<double> const& t_grid) {
  require(alpha > 0 && alpha <= 1, "delta growth check needs alpha in (0, 1]");
  require(delta > 0, "delta growth check needs delta > 0");
  DeltaGrowth out;
  for (double t : t_grid) {
    require(t > 0, "time grid must be positive");
    double lf = flow.log_fbar(t);
    out.t.push_back(t);
    out.log_upper.push_back((1 / alpha + delta) * std::log(t) + lf);
    out.log_lower.push_back((1 / alpha - delta) * std::log(t) + lf);
  }
  return out;
}

//! phi(z) alpha z^alpha L(1/z), which tends to 1 as z -> 0.
inline std::vector<double> karamata_phi_check(CumulantFlow const& flow,
                                              std::vector<double> const& z_grid) {
  auto const& m = flow.mechanism();
  double a = m.alpha();
  require(a > 0, "Karamata check for phi needs alpha > 0");
  std::vector<double> r;
  for (double z : z_grid) {
    require(z > 0, "z grid must be positive");
    double lz = std::log(z);
    r.push_back(flow.phi_at_log(lz) * a * std::exp(a * lz) * m.slowly_varying_at_log(-lz));
  }
  return r;
}

//---------------------------------------------------------------------------//
// Levy tail
//---------------------------------------------------------------------------//

//! U(z) = \int_{(0, z]} x^2 Lambda(dx)
inline double levy_U(LevyTriplet const& tr, double z, double rel_tol = 1e-11) {
  require(z > 0, "U requires z > 0");
  double v = 0;
  for (auto const& a : tr.atoms())
    if (a.position <= z) v += a.mass * a.position * a.position;
  if (auto const* d = tr.density()) {
    auto f = [&](double q) { return std::exp(3 * q + d->log_at_log(q)); };
    double top = std::log(z);
    double split = std::min(top, -10.0);
    v += num::integrate_lower_tail(f, split, 3 - d->exponent_at_zero(), rel_tol, "U lower") +
         num::integrate(f, split, top, rel_tol, "U body");
  }
  return v;
}

//! U-hat(theta) = \int e^{-theta x} dU(x) = \int x^2 e^{-theta x} Lambda(dx)
inline double levy_U_hat(LevyTriplet const& tr, double theta, double rel_tol = 1e-11) {
  require(theta > 0, "U-hat requires theta > 0");
  double v = 0;
  for (auto const& a : tr.atoms())
    v += a.mass * a.position * a.position * std::exp(-theta * a.position);
  v += tr.density_integral([&](double q) { return 2 * q - theta * std::exp(q); }, 2.0,
                           -num::kInf, -std::log(theta), rel_tol);
  return v;
}

struct LevyTailDiagnostic {
  bool trivial_measure = false;  //!< Lambda = 0: nothing to diagnose
  std::optional<IndexEstimate> U_at_infinity;
  std::optional<IndexEstimate> U_hat_at_zero;
};

inline LevyTailDiagnostic levy_tail_diagnostic(LevyTriplet const& tr,
                                               std::vector<double> const& z_grid,
                                               std::vector<double> const& theta_grid) {
  LevyTailDiagnostic d;
  if (!tr.has_jumps()) {
    d.trivial_measure = true;
    return d;
  }
  d.U_at_infinity = estimate_index_on_grid([&](double z) { return std::log(levy_U(tr, z)); },
                                           z_grid, Endpoint::infinity);
  d.U_hat_at_zero = estimate_index_on_grid(
      [&](double th) { return std::log(levy_U_hat(tr, th)); }, theta_grid, Endpoint::zero);
  return d;
}

}  // namespace cbp
