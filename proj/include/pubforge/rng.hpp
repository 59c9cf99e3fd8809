#pragma once

// Counter-based random streams.
//
// Every stochastic routine in the library draws from a Philox4x32-10 stream
// addressed by (key, stream id, block counter). Streams are cheap to create
// and fully determined by their address, which is what lets per-researcher
// and per-replicate simulation run in any order, on any number of threads,
// and still produce identical output.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace pubforge {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used to turn author ids into stream addresses.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// The Philox4x32 block function with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// UniformRandomBitGenerator over one Philox stream.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t stream = 0) : key_(key), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 2) refill();
    return buffer_[lane_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// An independent stream addressed by `index` under this stream.
  CounterRng substream(std::uint64_t index) const {
    return CounterRng(key_, splitmix64(stream_ ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    auto out = philox4x32_10(ctr, {static_cast<std::uint32_t>(key_),
                                   static_cast<std::uint32_t>(key_ >> 32)});
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    ++block_;
    lane_ = 0;
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int lane_ = 2;
};

/// Stream for one researcher and replicate under a run seed.
inline CounterRng researcher_stream(std::uint64_t seed, std::string_view author_id,
                                    std::uint64_t replicate) {
  return CounterRng(splitmix64(seed ^ splitmix64(fnv1a64(author_id))), replicate);
}

/// Poisson variate: sequential-search inversion below 10, PTRS above.
template <typename Rng>
std::int64_t sample_poisson(double lambda, Rng& rng) {
  if (!(lambda > 0.0)) return 0;
  if (lambda < 10.0) {
    double u = rng.uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
      if (p <= 0.0 && static_cast<double>(k) > lambda) break;  // tail underflow
    }
    return k;
  }
  // Hörmann's transformed rejection with squeeze.
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

}  // namespace pubforge
