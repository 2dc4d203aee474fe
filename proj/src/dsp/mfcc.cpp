#include "avasd/dsp/mfcc.hpp"

#include <algorithm>
#include <numbers>

#include "avasd/core/error.hpp"

namespace avasd::dsp {

std::size_t MfccConfig::win_samples() const {
  return static_cast<std::size_t>(std::lround(win_ms * sample_rate_hz / 1000.0));
}

std::size_t MfccConfig::hop_samples() const {
  return static_cast<std::size_t>(std::lround(hop_ms * sample_rate_hz / 1000.0));
}

void MfccConfig::validate() const {
  if (sample_rate_hz <= 0) throw ArgumentError("sample rate must be positive");
  if (win_samples() == 0 || hop_samples() == 0) {
    throw ArgumentError("window and hop must each span at least one sample");
  }
  if (!is_power_of_two(n_fft) || n_fft < 4) {
    throw ArgumentError("n_fft must be a power of two >= 4, got " + std::to_string(n_fft));
  }
  if (win_samples() > n_fft) {
    throw ArgumentError("window of " + std::to_string(win_samples()) +
                        " samples exceeds n_fft " + std::to_string(n_fft));
  }
  if (n_mels == 0 || n_ceps == 0 || n_ceps > n_mels) {
    throw ArgumentError("need 0 < n_ceps <= n_mels (n_ceps=" + std::to_string(n_ceps) +
                        ", n_mels=" + std::to_string(n_mels) + ")");
  }
  if (!(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= sample_rate_hz / 2.0)) {
    throw ArgumentError("need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(log_floor > 0.0)) throw ArgumentError("log floor must be positive");
}

std::size_t frame_count(std::size_t n_samples, const MfccConfig& cfg) {
  const std::size_t win = cfg.win_samples();
  if (n_samples < win) return 0;
  return (n_samples - win) / cfg.hop_samples() + 1;
}

namespace {

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  return w;
}

Tensor<double> frame_with(std::span<const double> waveform, const MfccConfig& cfg,
                          const std::vector<double>& window) {
  const std::size_t win = cfg.win_samples();
  const std::size_t hop = cfg.hop_samples();
  const std::size_t n_frames = frame_count(waveform.size(), cfg);
  if (n_frames == 0) {
    throw ArgumentError("waveform of " + std::to_string(waveform.size()) +
                        " samples is shorter than one analysis window; need at least " +
                        std::to_string(win));
  }
  std::vector<double> emphasized;
  if (cfg.preemphasis != 0.0) {
    emphasized.assign(waveform.begin(), waveform.end());
    for (std::size_t i = emphasized.size(); i-- > 1;)
      emphasized[i] -= cfg.preemphasis * waveform[i - 1];
    waveform = emphasized;
  }
  Tensor<double> frames({n_frames, win});
  for (std::size_t f = 0; f < n_frames; ++f)
    for (std::size_t i = 0; i < win; ++i) frames(f, i) = waveform[f * hop + i] * window[i];
  return frames;
}

}  // namespace

Tensor<double> frame_and_window(std::span<const double> waveform, const MfccConfig& cfg) {
  cfg.validate();
  return frame_with(waveform, cfg, hamming(cfg.win_samples()));
}

Tensor<double> power_spectrum(const Tensor<double>& frames, std::size_t n_fft) {
  if (frames.rank() != 2) {
    throw ShapeError("power_spectrum expects [n_frames, win], got " +
                     shape_to_string(frames.shape()));
  }
  const RealPowerSpectrum spec(n_fft);
  const std::size_t n = frames.dim(0), win = frames.dim(1);
  Tensor<double> out({n, spec.bins()});
  for (std::size_t f = 0; f < n; ++f)
    spec.compute(frames.data().subspan(f * win, win), out.data().subspan(f * spec.bins(), spec.bins()));
  return out;
}

MelFilterbank build_mel_filterbank(const MfccConfig& cfg) {
  cfg.validate();
  const std::size_t n_mels = cfg.n_mels;
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(cfg.fmax_hz);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));

  // Quantized positions must stay distinct or neighbouring filters collapse.
  std::size_t prev_bin = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto bin = static_cast<std::size_t>(
        std::floor(static_cast<double>(cfg.n_fft + 1) * edges[i] / cfg.sample_rate_hz));
    if (i > 0 && bin <= prev_bin) {
      throw ArgumentError("mel points " + std::to_string(i - 1) + " and " + std::to_string(i) +
                          " fall in the same FFT bin; n_fft=" + std::to_string(cfg.n_fft) +
                          " is too small for n_mels=" + std::to_string(n_mels));
    }
    prev_bin = bin;
  }

  MelFilterbank bank;
  bank.weights = Tensor<double>({n_mels, bins});
  const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / static_cast<double>(cfg.n_fft);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    bank.lower_hz.push_back(lo);
    bank.center_freqs_hz.push_back(mid);
    bank.upper_hz.push_back(hi);
    double row_sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      bank.weights(m, k) = w;
      row_sum += w;
    }
    if (!(row_sum > 0.0)) {
      throw ArgumentError("mel filter " + std::to_string(m) +
                          " covers no FFT bin; increase n_fft or reduce n_mels");
    }
  }
  return bank;
}

MfccExtractor::MfccExtractor(MfccConfig cfg)
    : cfg_(cfg), bank_(build_mel_filterbank(cfg_)), spectrum_(cfg_.n_fft),
      window_(hamming(cfg_.win_samples())) {
  const std::size_t n = cfg_.n_mels;
  dct_.resize(cfg_.n_ceps * n);
  for (std::size_t k = 0; k < cfg_.n_ceps; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n; ++i)
      dct_[k * n + i] = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                         (2.0 * static_cast<double>(i) + 1.0) /
                                         (2.0 * static_cast<double>(n)));
  }
  const std::size_t bins = spectrum_.bins();
  for (std::size_t m = 0; m < n; ++m) {
    const double* w = bank_.weights.data().data() + m * bins;
    std::size_t first = 0, last = bins;
    while (first < bins && w[first] == 0.0) ++first;
    while (last > first && w[last - 1] == 0.0) --last;
    support_.emplace_back(first, last);
  }
}

Tensor<double> MfccExtractor::compute(std::span<const double> waveform) const {
  const Tensor<double> frames = frame_with(waveform, cfg_, window_);
  const std::size_t n_frames = frames.dim(0);
  const std::size_t win = frames.dim(1);
  const std::size_t bins = spectrum_.bins();
  const std::size_t n_mels = cfg_.n_mels;
  Tensor<double> out({n_frames, cfg_.n_ceps});
  std::vector<double> power(bins), log_mel(n_mels);
  for (std::size_t f = 0; f < n_frames; ++f) {
    spectrum_.compute(frames.data().subspan(f * win, win), power);
    for (std::size_t m = 0; m < n_mels; ++m) {
      const double* w = bank_.weights.data().data() + m * bins;
      double e = 0.0;
      for (std::size_t k = support_[m].first; k < support_[m].second; ++k) e += w[k] * power[k];
      log_mel[m] = std::log(e + cfg_.log_floor);
    }
    for (std::size_t k = 0; k < cfg_.n_ceps; ++k) {
      double c = 0.0;
      for (std::size_t m = 0; m < n_mels; ++m) c += dct_[k * n_mels + m] * log_mel[m];
      out(f, k) = c;
    }
  }
  return out;
}

Tensor<double> mfcc(std::span<const double> waveform, const MfccConfig& cfg) {
  return MfccExtractor(cfg).compute(waveform);
}

std::vector<MfccTile> tile_mfcc(const Tensor<double>& mfcc_matrix, const TileAlignment& align) {
  if (mfcc_matrix.rank() != 2) {
    throw ShapeError("tile_mfcc expects [n_frames, n_ceps], got " +
                     shape_to_string(mfcc_matrix.shape()));
  }
  const std::size_t n_frames = mfcc_matrix.dim(0);
  const std::size_t n_ceps = mfcc_matrix.dim(1);
  if (align.tile_frames == 0 || align.steps == 0) {
    throw ArgumentError("tile_mfcc needs at least one step and one frame per tile");
  }
  if (n_frames < align.tile_frames) {
    throw ArgumentError("tile_mfcc needs at least " + std::to_string(align.tile_frames) +
                        " frames, got " + std::to_string(n_frames));
  }
  const long max_start = static_cast<long>(n_frames - align.tile_frames);
  std::vector<MfccTile> tiles;
  tiles.reserve(align.steps);
  for (std::size_t t = 0; t < align.steps; ++t) {
    const double center =
        (static_cast<double>(t) + 0.5) * align.step_seconds * align.frames_per_second;
    const long start = std::clamp(std::lround(center) - static_cast<long>(align.tile_frames / 2),
                                  0L, max_start);
    MfccTile tile{Tensor<double>({n_ceps, align.tile_frames}), static_cast<std::size_t>(start),
                  static_cast<double>(start) / align.frames_per_second};
    for (std::size_t c = 0; c < n_ceps; ++c)
      for (std::size_t j = 0; j < align.tile_frames; ++j)
        tile.values(c, j) = mfcc_matrix(static_cast<std::size_t>(start) + j, c);
    tiles.push_back(std::move(tile));
  }
  return tiles;
}

template <typename T>
NormStats compute_norm_stats(std::span<const Tensor<T>> tensors) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : tensors) {
    for (T v : t.data()) sum += static_cast<double>(v);
    count += t.size();
  }
  if (count == 0) throw ArgumentError("cannot compute normalization statistics of no data");
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (const auto& t : tensors)
    for (T v : t.data()) {
      const double d = static_cast<double>(v) - mean;
      sq += d * d;
    }
  const double var = sq / static_cast<double>(count);
  if (!(var > 0.0)) {
    throw NumericError("feature variance is zero; cannot normalize constant data");
  }
  return {mean, var};
}

template <typename T>
NormStats normalize_features(std::span<Tensor<T>> tensors, std::optional<NormStats> stats) {
  const NormStats s =
      stats ? *stats : compute_norm_stats(std::span<const Tensor<T>>(tensors.data(), tensors.size()));
  if (!(s.var > 0.0)) throw NumericError("normalization variance must be positive");
  const double inv = 1.0 / std::sqrt(s.var + kNormEpsilon);
  for (auto& t : tensors)
    for (T& v : t.data()) v = static_cast<T>((static_cast<double>(v) - s.mean) * inv);
  return s;
}

template NormStats compute_norm_stats(std::span<const Tensor<float>>);
template NormStats compute_norm_stats(std::span<const Tensor<double>>);
template NormStats normalize_features(std::span<Tensor<float>>, std::optional<NormStats>);
template NormStats normalize_features(std::span<Tensor<double>>, std::optional<NormStats>);

}  // namespace avasd::dsp
