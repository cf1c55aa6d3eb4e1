#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "cbp/error.hpp"

namespace cbp {

/*!
 * theta -> \int e^{-theta y} dH(y) for a sub-probability law H.
 *
 * `complex` is optional; when present the transform is analytic on
 * Re(theta) > 0 and contour methods may be used.
 */
struct TransformHandle {
  std::function<double(double)> real;
  std::function<std::complex<double>(std::complex<double>)> complex;
  double total_mass = 1.0;

  bool analytic() const { return static_cast<bool>(complex); }
};

enum class InversionMethod { automatic, talbot, stehfest };

inline const char* to_string(InversionMethod m) {
  switch (m) {
    case InversionMethod::automatic: return "automatic";
    case InversionMethod::talbot: return "talbot";
    case InversionMethod::stehfest: return "stehfest";
  }
  return "?";
}

struct InversionOptions {
  InversionMethod method = InversionMethod::automatic;
  int talbot_nodes = 32;
  int stehfest_terms = 14;  //!< even
  double talbot_slack = 1e-3;
  double stehfest_slack = 1e-2;
};

struct InversionResult {
  double value;  //!< clamped to [0, total_mass]
  double raw;
  InversionMethod method;
};

namespace detail {

//! Gaver-Stehfest weights V_k, k = 1..n, in extended precision.
inline std::vector<long double> stehfest_weights(int n) {
  require(n >= 2 && n % 2 == 0 && n <= 30, "Stehfest needs an even term count in [2, 30]");
  auto fact = [](int k) {
    long double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  int half = n / 2;
  std::vector<long double> v(n + 1, 0.0L);
  for (int k = 1; k <= n; ++k) {
    long double sum = 0;
    for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
      sum += std::pow(static_cast<long double>(j), half) * fact(2 * j) /
             (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
    }
    v[k] = ((k + half) % 2 == 0 ? 1 : -1) * sum;
  }
  return v;
}

inline std::vector<long double> const& cached_stehfest_weights(int n) {
  static const auto table = [] {
    std::vector<std::vector<long double>> t(31);
    for (int k = 2; k <= 30; k += 2) t[k] = stehfest_weights(k);
    return t;
  }();
  require(n >= 2 && n % 2 == 0 && n <= 30, "Stehfest needs an even term count in [2, 30]");
  return table[n];
}

//! Fixed Talbot contour for f(y) = L^{-1}[F](y).
template <class F>
double talbot(F&& F_of_s, double y, int m) {
  double r = 2.0 * m / (5.0 * y);
  double sum = 0.5 * std::real(F_of_s(std::complex<double>(r, 0.0))) * std::exp(r * y);
  for (int k = 1; k < m; ++k) {
    double th = k * std::numbers::pi / m;
    double cot = std::cos(th) / std::sin(th);
    std::complex<double> s(r * th * cot, r * th);
    double sigma = th + (th * cot - 1.0) * cot;
    sum += std::real(std::exp(y * s) * F_of_s(s) * std::complex<double>(1.0, sigma));
  }
  return r / m * sum;
}

}  // namespace detail

/*!
 * CDF H(y) from the Laplace-Stieltjes transform h, i.e. the inverse
 * transform of h(s)/s. Contour (fixed Talbot) when h is analytic,
 * Gaver-Stehfest with long double weights otherwise.
 */
inline InversionResult invert_cdf(TransformHandle const& h, double y,
                                  InversionOptions const& opts = {}) {
  require(y > 0 && std::isfinite(y), "invert_cdf requires 0 < y < inf");
  require(static_cast<bool>(h.real) || h.analytic(), "empty transform handle");

  bool use_talbot = h.analytic() && opts.method != InversionMethod::stehfest;
  InversionResult res{};
  double slack;
  if (use_talbot) {
    res.method = InversionMethod::talbot;
    res.raw = detail::talbot([&](std::complex<double> s) { return h.complex(s) / s; }, y,
                             opts.talbot_nodes);
    slack = opts.talbot_slack;
  } else {
    require(static_cast<bool>(h.real), "Stehfest inversion needs a real-axis evaluator",
            ErrorCode::inversion_failure);
    res.method = InversionMethod::stehfest;
    auto const& v = detail::cached_stehfest_weights(opts.stehfest_terms);
    long double ln2 = std::numbers::ln2_v<long double>;
    long double sum = 0;
    for (int k = 1; k <= opts.stehfest_terms; ++k) {
      double s = static_cast<double>(k * ln2 / y);
      sum += v[k] * static_cast<long double>(h.real(s)) / k;
    }
    res.raw = static_cast<double>(sum);
    slack = opts.stehfest_slack;
  }

  double m = h.total_mass;
  if (!std::isfinite(res.raw) || res.raw < -slack * m || res.raw > (1 + slack) * m) {
    throw Error(ErrorCode::inversion_failure,
                std::string(to_string(res.method)) + " inversion at y=" + std::to_string(y) +
                    " produced " + std::to_string(res.raw) + " outside [0, " +
                    std::to_string(m) + "]");
  }
  res.value = std::clamp(res.raw, 0.0, m);
  return res;
}

//! max_{y in grid} |F(y) - G(y)|
template <class F, class G>
double sup_distance(F&& f, G&& g, std::vector<double> const& grid) {
  require(!grid.empty(), "sup_distance needs a nonempty grid");
  require(std::is_sorted(grid.begin(), grid.end()), "sup_distance grid must be sorted");
  double d = 0;
  for (double y : grid) d = std::max(d, std::abs(f(y) - g(y)));
  return d;
}

}  // namespace cbp
