#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace avasd::dsp {

/// Iterative radix-2 FFT with precomputed bit-reversal and twiddles.
class FftPlan {
 public:
  /// `n` must be a power of two >= 2.
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// In-place forward transform of exactly size() points.
  void transform(std::span<std::complex<double>> data) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddles_;  // e^{-2 pi i k / n}, k < n/2
};

/// One-sided power spectrum |X[k]|^2, k = 0..n/2, of a real frame
/// zero-padded to n. The real input is packed into an n/2-point complex
/// transform and split afterwards.
class RealPowerSpectrum {
 public:
  explicit RealPowerSpectrum(std::size_t n_fft);

  std::size_t n_fft() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// `frame.size()` must not exceed n_fft; `out.size()` must equal bins().
  void compute(std::span<const double> frame, std::span<double> out) const;

 private:
  std::size_t n_;
  FftPlan half_;
  std::vector<std::complex<double>> split_twiddles_;  // e^{-2 pi i k / n}, k <= n/2
};

bool is_power_of_two(std::size_t n) noexcept;

}  // namespace avasd::dsp
