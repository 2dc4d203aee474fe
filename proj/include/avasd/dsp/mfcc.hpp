#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avasd/core/tensor.hpp"
#include "avasd/dsp/fft.hpp"

namespace avasd::dsp {

/// MFCC front-end parameters. Only the 25 ms window, 10 ms hop and 13
/// coefficients are fixed by the model; the rest follow common speech
/// defaults and may be overridden.
struct MfccConfig {
  int sample_rate_hz = 16000;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_fft = 512;
  std::size_t n_mels = 40;
  std::size_t n_ceps = 13;  // C0..C12
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double preemphasis = 0.0;  // 0 disables; e.g. 0.97
  double log_floor = 1e-10;

  std::size_t win_samples() const;
  std::size_t hop_samples() const;
  double frames_per_second() const { return 1000.0 / hop_ms; }

  /// Throws ArgumentError on an inconsistent configuration.
  void validate() const;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters with unit peak, laid on the FFT bin frequencies.
struct MelFilterbank {
  Tensor<double> weights;               // [n_mels, n_fft/2 + 1]
  std::vector<double> lower_hz;         // left edge of each triangle
  std::vector<double> center_freqs_hz;  // peak
  std::vector<double> upper_hz;         // right edge

  std::size_t n_mels() const { return center_freqs_hz.size(); }
  double bandwidth_hz(std::size_t m) const { return upper_hz[m] - lower_hz[m]; }
};

/// floor((len - win) / hop) + 1, or 0 if the waveform is shorter than a window.
std::size_t frame_count(std::size_t n_samples, const MfccConfig& cfg);

/// Frames the waveform with the configured hop and applies a Hamming window
/// w[n] = 0.54 - 0.46 cos(2 pi n / (N - 1)). Returns [n_frames, win_samples].
Tensor<double> frame_and_window(std::span<const double> waveform, const MfccConfig& cfg);

/// |FFT|^2 of each zero-padded frame, bins 0..n_fft/2. Returns [n_frames, n_fft/2+1].
Tensor<double> power_spectrum(const Tensor<double>& frames, std::size_t n_fft);

/// n_mels + 2 points equally spaced on the mel scale between fmin and fmax.
/// Fails when the points do not map to strictly increasing FFT bins, which
/// means n_fft is too small for the requested resolution.
MelFilterbank build_mel_filterbank(const MfccConfig& cfg);

/// Reusable extractor: caches the filterbank, FFT plan, window and DCT basis.
/// compute() is const and allocation-local, so one extractor can serve many
/// threads.
class MfccExtractor {
 public:
  explicit MfccExtractor(MfccConfig cfg = {});

  const MfccConfig& config() const noexcept { return cfg_; }
  const MelFilterbank& filterbank() const noexcept { return bank_; }

  /// [n_frames, n_ceps]
  Tensor<double> compute(std::span<const double> waveform) const;

 private:
  MfccConfig cfg_;
  MelFilterbank bank_;
  RealPowerSpectrum spectrum_;
  std::vector<double> window_;
  std::vector<double> dct_;  // [n_ceps, n_mels], orthonormal DCT-II rows
  std::vector<std::pair<std::size_t, std::size_t>> support_;  // nonzero bins [first, last) per filter
};

/// log(mel energy + floor) decorrelated by an orthonormal DCT-II, keeping
/// coefficients 0..n_ceps-1.
Tensor<double> mfcc(std::span<const double> waveform, const MfccConfig& cfg = {});

struct MfccTile {
  Tensor<double> values;  // [n_ceps, tile_frames], coefficient-major
  std::size_t start_frame = 0;
  double start_time_s = 0.0;
};

struct TileAlignment {
  std::size_t steps = 1;
  double step_seconds = 0.5;  // one model step = five video frames at 10 fps
  double frames_per_second = 100.0;
  std::size_t tile_frames = 20;
};

/// Cuts one tile per model step, centred on the midpoint of that step and
/// clamped to the valid frame range. Tile values are copied verbatim.
std::vector<MfccTile> tile_mfcc(const Tensor<double>& mfcc_matrix, const TileAlignment& align);

/// Scalar mean and (population) variance over every element of a set of tensors.
struct NormStats {
  double mean = 0.0;
  double var = 1.0;
};

constexpr double kNormEpsilon = 1e-8;

template <typename T>
NormStats compute_norm_stats(std::span<const Tensor<T>> tensors);

/// x <- (x - mean) / sqrt(var + 1e-8). When `stats` is absent they are
/// computed from `tensors` (pass the training split only) and returned so
/// the same transform can be applied to validation data.
template <typename T>
NormStats normalize_features(std::span<Tensor<T>> tensors, std::optional<NormStats> stats);

}  // namespace avasd::dsp
