#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "nlbranch/errors.hpp"

namespace nlbranch {

/// Philox4x32-10 block function (Salmon et al., SC'11).
///
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Counter-based random stream.
///
/// The Philox counter is (draw block, stream_id): the low 64 bits index the
/// block within the stream and the high 64 bits hold the stream id, so streams
/// with different ids never share a block. Every output is a pure function of
/// (seed, stream_id, counter), where counter is the number of 64-bit words
/// consumed so far. Replicate i of a Monte Carlo run owns stream i.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0)
      : seed_(seed), stream_id_(stream_id), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
    const std::uint64_t block = counter_ >> 1;
    if (!block_valid_ || block != cached_block_) {
      const std::array<std::uint32_t, 4> ctr = {
          static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
          static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
      const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                                static_cast<std::uint32_t>(seed_ >> 32)};
      bits_ = philox4x32(ctr, key);
      cached_block_ = block;
      block_valid_ = true;
    }
    const unsigned lane = static_cast<unsigned>(counter_ & 1u) * 2;
    ++counter_;
    return (std::uint64_t{bits_[lane + 1]} << 32) | bits_[lane];
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by the Box-Muller transform; the second variate of each
  /// pair is kept for the next call.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(next_uniform()));
    const double angle = 2.0 * std::numbers::pi * next_uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Poisson variate with mean lambda.
  ///
  /// Exact for lambda <= kPoissonExactLimit: inversion below 10 and
  /// Hormann's PTRS transformed rejection above. Larger means use the rounded
  /// normal approximation.
  std::uint64_t next_poisson(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw DomainError("next_poisson: mean must be finite and nonnegative");
    }
    if (lambda == 0.0) return 0;
    if (lambda < 10.0) return poisson_inversion(lambda);
    if (lambda <= kPoissonExactLimit) return poisson_ptrs(lambda);
    const double x = std::round(lambda + std::sqrt(lambda) * next_normal());
    return x <= 0.0 ? 0 : static_cast<std::uint64_t>(x);
  }

  static constexpr double kPoissonExactLimit = 1e12;

 private:
  std::uint64_t poisson_inversion(double lambda) {
    const double u = next_uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= lambda / static_cast<double>(k);
      const double next = cdf + p;
      if (next == cdf) break;  // tail exhausted in double precision
      cdf = next;
    }
    return k;
  }

  std::uint64_t poisson_ptrs(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = next_uniform() - 0.5;
      const double v = next_uniform();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          -lambda + k * loglam - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_;
  std::array<std::uint32_t, 4> bits_{};
  std::uint64_t cached_block_ = 0;
  bool block_valid_ = false;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nlbranch
