#include "avasd/data/dataset.hpp"

#include <cmath>

#include "avasd/core/error.hpp"
#include "avasd/io/manifest.hpp"
#include "avasd/io/tensor_blob.hpp"
#include "avasd/io/wav.hpp"

namespace avasd::data {

Tensor<float> audio_features(std::span<const double> waveform, std::size_t steps,
                             const dsp::MfccExtractor& extractor) {
  const Tensor<double> coeffs = extractor.compute(waveform);
  dsp::TileAlignment align;
  align.steps = steps;
  align.frames_per_second = extractor.config().frames_per_second();
  const auto tiles = dsp::tile_mfcc(coeffs, align);
  const std::size_t n_ceps = coeffs.dim(1);
  Tensor<float> out({steps, n_ceps, align.tile_frames});
  float* dst = out.data().data();
  for (const auto& tile : tiles)
    for (double v : tile.values.data()) *dst++ = static_cast<float>(v);
  return out;
}

namespace {

template <typename Member>
dsp::NormStats fit_and_apply(std::vector<AvSequence>& fit, std::vector<AvSequence>& other, Member m) {
  std::vector<Tensor<float>> pool;
  pool.reserve(fit.size());
  for (auto& s : fit) pool.push_back(std::move(s.*m));
  const dsp::NormStats stats = dsp::normalize_features<float>(pool, std::nullopt);
  for (std::size_t i = 0; i < fit.size(); ++i) fit[i].*m = std::move(pool[i]);
  pool.clear();
  for (auto& s : other) pool.push_back(std::move(s.*m));
  if (!pool.empty()) dsp::normalize_features<float>(pool, stats);
  for (std::size_t i = 0; i < other.size(); ++i) other[i].*m = std::move(pool[i]);
  return stats;
}

void apply_one(Tensor<float>& t, const dsp::NormStats& s) {
  std::vector<Tensor<float>> one;
  one.push_back(std::move(t));
  dsp::normalize_features<float>(one, s);
  t = std::move(one[0]);
}

}  // namespace

FeatureStats normalize_dataset(std::vector<AvSequence>& fit, std::vector<AvSequence>& apply_only) {
  if (fit.empty()) throw ArgumentError("cannot fit normalization on an empty training split");
  FeatureStats stats;
  stats.video = fit_and_apply(fit, apply_only, &AvSequence::video);
  stats.audio = fit_and_apply(fit, apply_only, &AvSequence::audio);
  return stats;
}

void apply_stats(std::span<AvSequence> seqs, const FeatureStats& stats) {
  for (auto& s : seqs) {
    apply_one(s.video, stats.video);
    apply_one(s.audio, stats.audio);
  }
}

void apply_audio_stats(Tensor<float>& audio, const dsp::NormStats& stats) { apply_one(audio, stats); }

AvDataset synthesize_dataset(const SynthConfig& cfg, const dsp::MfccExtractor& extractor) {
  if (extractor.config().sample_rate_hz != cfg.sample_rate_hz) {
    throw ArgumentError("MFCC sample rate differs from the generator's");
  }
  AvDataset ds;
  for (const auto& plan : plan_synthetic(cfg)) {
    AvSequence s;
    s.id = plan.id;
    s.labels = plan.labels;
    s.video = render_video(cfg, plan);
    s.audio = audio_features(render_audio(cfg, plan), plan.kinds.size(), extractor);
    s.waveform = [cfg, plan] { return render_audio(cfg, plan); };
    (plan.split == io::Split::kTrain ? ds.train : ds.val).push_back(std::move(s));
  }
  return ds;
}

AvDataset load_dataset(const std::filesystem::path& dir, const dsp::MfccExtractor& extractor) {
  const auto records = io::read_manifest(dir / "manifest.jsonl");
  if (records.empty()) throw FormatError("manifest in " + dir.string() + " has no records");
  AvDataset ds;
  std::size_t steps = 0;
  for (const auto& r : records) {
    AvSequence s;
    s.id = r.id;
    s.labels = r.labels;
    if (steps == 0) steps = r.labels.size();
    if (r.labels.size() != steps) {
      throw FormatError("record " + r.id + " has " + std::to_string(r.labels.size()) +
                        " labels; the dataset uses sequences of " + std::to_string(steps));
    }
    s.video = io::load_blob<float>(dir / r.video_path);
    if (s.video.rank() != 4 || s.video.dim(0) != steps || s.video.dim(1) != kFramesPerStep ||
        s.video.dim(2) != s.video.dim(3)) {
      throw FormatError("record " + r.id + ": video shape " + shape_to_string(s.video.shape()) +
                        " is not [" + std::to_string(steps) + ",5,S,S]");
    }
    const std::filesystem::path wav_path = dir / r.audio_path;
    const io::WavAudio wav = io::read_wav(wav_path);
    if (wav.sample_rate_hz != extractor.config().sample_rate_hz) {
      throw FormatError(wav_path.string() + ": sample rate " + std::to_string(wav.sample_rate_hz) +
                        " Hz, expected " + std::to_string(extractor.config().sample_rate_hz));
    }
    const auto need = static_cast<std::size_t>(std::ceil(steps * kStepSeconds * wav.sample_rate_hz));
    if (wav.samples.size() < need) {
      throw FormatError(wav_path.string() + ": " + std::to_string(wav.samples.size()) +
                        " samples cannot cover " + std::to_string(steps) + " steps");
    }
    s.audio = audio_features(wav.samples, steps, extractor);
    s.waveform = [wav_path] { return io::read_wav(wav_path).samples; };
    (r.split == io::Split::kTrain ? ds.train : ds.val).push_back(std::move(s));
  }
  return ds;
}

}  // namespace avasd::data
