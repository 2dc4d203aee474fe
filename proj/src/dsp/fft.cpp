#include "avasd/dsp/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "avasd/core/error.hpp"

namespace avasd::dsp {

namespace {
// Plain product; std::complex's operator* takes a slow path for NaN/Inf recovery.
inline std::complex<double> mul(std::complex<double> a, std::complex<double> b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}
}  // namespace

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n < 2 || !is_power_of_two(n)) {
    throw ArgumentError("FFT size must be a power of two >= 2, got " + std::to_string(n));
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    bitrev_[i] = r;
  }
  twiddles_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddles_[k] = {std::cos(ang), std::sin(ang)};
  }
}

void FftPlan::transform(std::span<std::complex<double>> data) const {
  if (data.size() != n_) {
    throw ShapeError("FFT expects " + std::to_string(n_) + " points, got " +
                     std::to_string(data.size()));
  }
  for (std::size_t i = 0; i < n_; ++i)
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> t = mul(twiddles_[k * step], data[start + k + half]);
        const std::complex<double> u = data[start + k];
        data[start + k] = u + t;
        data[start + k + half] = u - t;
      }
    }
  }
}

namespace {
std::size_t half_size(std::size_t n_fft) {
  if (n_fft < 4 || !is_power_of_two(n_fft)) {
    throw ArgumentError("n_fft must be a power of two >= 4, got " + std::to_string(n_fft));
  }
  return n_fft / 2;
}
}  // namespace

RealPowerSpectrum::RealPowerSpectrum(std::size_t n_fft)
    : n_(n_fft), half_(half_size(n_fft)) {
  split_twiddles_.resize(n_ / 2 + 1);
  for (std::size_t k = 0; k <= n_ / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_);
    split_twiddles_[k] = {std::cos(ang), std::sin(ang)};
  }
}

void RealPowerSpectrum::compute(std::span<const double> frame, std::span<double> out) const {
  if (frame.size() > n_) {
    throw ShapeError("frame of " + std::to_string(frame.size()) + " samples exceeds n_fft " +
                     std::to_string(n_));
  }
  if (out.size() != bins()) {
    throw ShapeError("power spectrum output needs " + std::to_string(bins()) + " bins");
  }
  const std::size_t m = n_ / 2;
  std::vector<std::complex<double>> packed(m);
  // z[n] = x[2n] + i x[2n+1]
  for (std::size_t i = 0; i < m; ++i) {
    const double re = 2 * i < frame.size() ? frame[2 * i] : 0.0;
    const double im = 2 * i + 1 < frame.size() ? frame[2 * i + 1] : 0.0;
    packed[i] = {re, im};
  }
  half_.transform(packed);
  // X[k] = E[k] + W^k O[k], E = (Z[k] + conj Z[m-k]) / 2, O = (Z[k] - conj Z[m-k]) / 2i
  for (std::size_t k = 0; k <= m; ++k) {
    const std::complex<double> zk = packed[k % m];
    const std::complex<double> zc = std::conj(packed[(m - k) % m]);
    const std::complex<double> even = 0.5 * (zk + zc);
    const std::complex<double> odd = mul({0.0, -0.5}, zk - zc);
    out[k] = std::norm(even + mul(split_twiddles_[k], odd));
  }
}

}  // namespace avasd::dsp
