#include "avasd/core/prng.hpp"

#include <cmath>
#include <numbers>

#include "avasd/core/error.hpp"

namespace avasd {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Prng::Prng(std::uint64_t seed) {
  std::uint64_t x = seed;
  s0_ = splitmix64(x);
  s1_ = splitmix64(x);
  if (s0_ == 0 && s1_ == 0) s1_ = 1;
}

Prng Prng::for_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ 0x6A09E667F3BCC909ULL;
  std::uint64_t mixed = splitmix64(x);
  x = mixed ^ (stream * 0xD1B54A32D192ED03ULL);
  return Prng(splitmix64(x));
}

std::uint64_t Prng::next_u64() {
  const std::uint64_t s0 = s0_;
  std::uint64_t s1 = s1_;
  const std::uint64_t result = rotl(s0 * 5, 7) * 9;
  s1 ^= s0;
  s0_ = rotl(s0, 24) ^ s1 ^ (s1 << 16);
  s1_ = rotl(s1, 37);
  return result;
}

double Prng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Prng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Prng::below(std::uint64_t n) {
  if (n == 0) throw ArgumentError("Prng::below requires a positive bound");
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

}  // namespace avasd
