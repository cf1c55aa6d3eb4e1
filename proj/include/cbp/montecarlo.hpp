#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "cbp/error.hpp"
#include "cbp/random.hpp"

namespace cbp {

enum class SchemeKind { exact_feller, lamperti_euler };

struct Scheme {
  SchemeKind kind = SchemeKind::exact_feller;
  double step = 0;  //!< h for lamperti_euler
};

struct PathSample {
  double terminal_mass = 0;
  bool survived = false;  //!< terminal_mass > 0
  SeedRecord seed_record;
  Scheme scheme;
};

//---------------------------------------------------------------------------//
// Samplers
//---------------------------------------------------------------------------//

/*!
 * Exact draw of X_t for psi = b l^2 started at x:
 * N ~ Poisson(x / (b t)), X_t = Gamma(N, scale b t), X_t = 0 when N = 0.
 */
inline PathSample sample_feller(double t, double x, double b, Rng& rng) {
  require(t > 0 && x > 0 && b > 0, "sample_feller requires t, x, b > 0");
  PathSample s;
  s.seed_record = rng.record();
  s.scheme = {SchemeKind::exact_feller, 0};
  boost::random::poisson_distribution<long, double> pois(x / (b * t));
  long n = pois(rng);
  if (n > 0) {
    boost::random::gamma_distribution<double> gam(static_cast<double>(n), b * t);
    s.terminal_mass = gam(rng);
  }
  s.survived = s.terminal_mass > 0;
  return s;
}

/*!
 * Lamperti-Euler approximation for psi = c l^{1+alpha}:
 * X <- max(0, X + (c X h)^{1/(1+alpha)} S), S spectrally positive with
 * Laplace exponent l^{1+alpha}. Zero is absorbing.
 */
inline PathSample sample_stable_lamperti(double t, double x, double c, double alpha, double h,
                                         Rng& rng) {
  require(t > 0 && x >= 0 && c > 0, "sample_stable_lamperti requires t > 0, x >= 0, c > 0");
  require(alpha > 0 && alpha <= 1, "sample_stable_lamperti requires alpha in (0, 1]");
  require(h > 0 && h <= t / 10,
          "Euler step h = " + std::to_string(h) + " is too large for t = " + std::to_string(t) +
              " (need h <= t / 10)");
  PathSample s;
  s.seed_record = rng.record();
  s.scheme = {SchemeKind::lamperti_euler, h};
  double a = 1 + alpha;
  double X = x;
  double elapsed = 0;
  while (X > 0 && elapsed < t) {
    double dt = std::min(h, t - elapsed);
    X += std::pow(c * X * dt, 1 / a) * spectrally_positive_stable(a, rng);
    if (!(X > 0)) X = 0;
    elapsed += dt;
  }
  s.terminal_mass = X;
  s.survived = X > 0;
  return s;
}

//! n paths on streams first_stream, first_stream + 1, ...; independent of `threads`.
inline std::vector<PathSample> sample_paths(std::function<PathSample(Rng&)> const& one,
                                            std::size_t n, std::uint64_t seed,
                                            std::uint64_t first_stream = 0,
                                            unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::vector<PathSample> out(n);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < n; i += threads) {
        Rng rng(seed, first_stream + i);
        out[i] = one(rng);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  for (auto const& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::vector<PathSample> sample_feller_paths(double t, double x, double b, std::size_t n,
                                                   std::uint64_t seed,
                                                   std::uint64_t first_stream = 0) {
  return sample_paths([=](Rng& r) { return sample_feller(t, x, b, r); }, n, seed, first_stream);
}

inline std::vector<PathSample> sample_stable_paths(double t, double x, double c, double alpha,
                                                   double h, std::size_t n, std::uint64_t seed,
                                                   std::uint64_t first_stream = 0) {
  require(h > 0 && h <= t / 10, "Euler step must satisfy 0 < h <= t / 10");
  return sample_paths([=](Rng& r) { return sample_stable_lamperti(t, x, c, alpha, h, r); }, n,
                      seed, first_stream);
}

//---------------------------------------------------------------------------//
// Empirical laws
//---------------------------------------------------------------------------//

class EmpiricalLaw {
 public:
  EmpiricalLaw(std::vector<double> values, std::size_t total) : v_(std::move(values)), total_(total) {
    std::sort(v_.begin(), v_.end());
  }

  std::vector<double> const& values() const { return v_; }
  std::size_t total_paths() const { return total_; }
  std::size_t surviving_paths() const { return v_.size(); }
  double survival_fraction() const { return static_cast<double>(v_.size()) / total_; }
  double survival_standard_error() const {
    double p = survival_fraction();
    return std::sqrt(p * (1 - p) / total_);
  }

  double cdf(double y) const {
    auto it = std::upper_bound(v_.begin(), v_.end(), y);
    return static_cast<double>(it - v_.begin()) / v_.size();
  }

  //! sup_y |F_n(y) - F(y)| for a continuous reference F
  template <class F>
  double ks_distance(F&& ref) const {
    double n = static_cast<double>(v_.size()), d = 0;
    for (std::size_t i = 0; i < v_.size(); ++i) {
      double f = ref(v_[i]);
      d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    return d;
  }

 private:
  std::vector<double> v_;
  std::size_t total_;
};

//! Survivors' terminal masses divided by `norming`.
inline EmpiricalLaw empirical_conditional(std::vector<PathSample> const& samples,
                                          double norming, std::size_t min_survivors = 100) {
  require(norming > 0 && std::isfinite(norming), "norming must be positive");
  std::vector<double> v;
  for (auto const& s : samples)
    if (s.survived) v.push_back(s.terminal_mass / norming);
  if (v.size() < min_survivors)
    throw Error(ErrorCode::too_few_survivors,
                std::to_string(v.size()) + " of " + std::to_string(samples.size()) +
                    " paths survived (need " + std::to_string(min_survivors) +
                    "); increase N or decrease t");
  return EmpiricalLaw(std::move(v), samples.size());
}

//! sup_y |F_a(y) - F_b(y)| over the pooled sample
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "two-sample KS needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0, na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    double y = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= y) ++i;
    while (j < b.size() && b[j] <= y) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

inline std::vector<double> terminal_masses(std::vector<PathSample> const& samples) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (auto const& s : samples) v.push_back(s.terminal_mass);
  return v;
}

//! One row per path: stream id, terminal mass, survived flag.
inline void write_sample_dump(std::ostream& os, std::vector<PathSample> const& samples) {
  auto prec = os.precision(17);
  os << "# seed " << (samples.empty() ? 0 : samples.front().seed_record.seed) << "\n";
  os << "stream terminal_mass survived\n";
  for (auto const& s : samples)
    os << s.seed_record.stream << ' ' << s.terminal_mass << ' ' << (s.survived ? 1 : 0) << '\n';
  os.precision(prec);
}

}  // namespace cbp
