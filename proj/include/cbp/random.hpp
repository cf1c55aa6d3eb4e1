#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "cbp/error.hpp"

namespace cbp {

//! (seed, stream) pair identifying one independent RNG stream.
struct SeedRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(SeedRecord const&, SeedRecord const&) = default;
};

/*!
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * The key is the seed; the upper half of the counter holds the stream id,
 * so every (seed, stream) pair is an independent sequence of 2^64 blocks.
 * Satisfies UniformRandomBitGenerator.
 */
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : record_{seed, stream},
        key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
  explicit Philox4x32(SeedRecord r) : Philox4x32(r.seed, r.stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                       static_cast<std::uint32_t>(block_ >> 32),
                                       static_cast<std::uint32_t>(record_.stream),
                                       static_cast<std::uint32_t>(record_.stream >> 32)};
      out_ = bijection(ctr, key_);
      ++block_;
      pos_ = 0;
    }
    return out_[pos_++];
  }

  SeedRecord const& record() const { return record_; }

  //! One Philox4x32-10 block.
  static std::array<std::uint32_t, 4> bijection(std::array<std::uint32_t, 4> ctr,
                                                std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53, M1 = 0xCD9E8D57;
    constexpr std::uint32_t W0 = 0x9E3779B9, W1 = 0xBB67AE85;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
      std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += W0;
      key[1] += W1;
    }
    return ctr;
  }

 private:
  SeedRecord record_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> out_{};
  int pos_ = 4;
};

using Rng = Philox4x32;

/*!
 * Spectrally positive strictly a-stable variable, a in (1, 2], with
 * E exp(-l S) = exp(l^a) (Chambers-Mallows-Stuck, skewness 1).
 * For a = 2 this is N(0, 2).
 */
template <class Engine>
double spectrally_positive_stable(double a, Engine& rng) {
  require(a > 1 && a <= 2, "spectrally positive stable needs index in (1, 2]");
  constexpr double pi = std::numbers::pi;
  boost::random::uniform_01<double> unif;
  boost::random::exponential_distribution<double> expo(1.0);
  double v = pi * (unif(rng) - 0.5);
  double w = expo(rng);
  if (a == 2) return 2 * std::sin(v) * std::sqrt(w);

  double tan_half = std::tan(pi * a / 2);
  double b = std::atan(tan_half) / a;
  double s = std::pow(1 + tan_half * tan_half, 1 / (2 * a));
  double x = s * std::sin(a * (v + b)) / std::pow(std::cos(v), 1 / a) *
             std::pow(std::cos(v - a * (v + b)) / w, (1 - a) / a);
  // the generator above has scale 1, i.e. Laplace exponent l^a / |cos(pi a / 2)|
  return std::pow(std::abs(std::cos(pi * a / 2)), 1 / a) * x;
}

}  // namespace cbp
