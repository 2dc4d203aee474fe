#pragma once

#include <cstdint>
#include <limits>
#include <utility>

namespace avasd {

/// xoroshiro128** generator (128-bit state) seeded through splitmix64.
///
/// Everything downstream (normals, shuffles, Bernoulli draws) is implemented
/// here rather than through <random> distributions, whose output is
/// implementation-defined; equal seeds give equal streams on every platform.
class Prng {
 public:
  using result_type = std::uint64_t;

  explicit Prng(std::uint64_t seed = 0);

  /// Independent generator for sub-stream `stream` of `seed`, e.g. one per
  /// dataset record, so records can be regenerated in any order.
  static Prng for_stream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by the Box-Muller transform; the second variate of each
  /// pair is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t s0_;
  std::uint64_t s1_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace avasd
