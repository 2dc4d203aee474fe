#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avasd/core/tensor.hpp"
#include "avasd/io/manifest.hpp"

namespace avasd::data {

constexpr std::size_t kFramesPerStep = 5;
constexpr double kStepSeconds = 0.5;
constexpr double kVideoFps = 10.0;

/// What happens during one 0.5 s step. Only kSpeaking is a positive.
enum class StepKind : std::uint8_t {
  kSpeaking,   // speech + mouth moving in sync
  kSilent,     // no speech, still mouth
  kVoiceOver,  // speech, still mouth (someone off screen talks)
  kMouthing,   // no speech, mouth moving
};

inline bool has_speech(StepKind k) { return k == StepKind::kSpeaking || k == StepKind::kVoiceOver; }
inline bool has_motion(StepKind k) { return k == StepKind::kSpeaking || k == StepKind::kMouthing; }
inline int label_of(StepKind k) { return k == StepKind::kSpeaking ? 1 : 0; }

struct SynthConfig {
  std::size_t n_sequences = 2000;
  std::size_t seq_len = 10;
  /// Share of all steps that are kVoiceOver or kMouthing, split evenly.
  double confuser_fraction = 0.5;
  /// Speech power over background noise power, in dB.
  double snr_db = 20.0;
  std::uint64_t seed = 1;
  std::size_t image_size = 100;
  double val_fraction = 0.2;
  int sample_rate_hz = 16000;

  std::size_t samples_per_step() const;
  void validate() const;
};

struct SynthSequence {
  std::size_t index = 0;
  std::string id;
  std::vector<StepKind> kinds;
  std::vector<int> labels;
  io::Split split = io::Split::kTrain;
};

/// Step kinds for every sequence. Counts are exact: of n*T steps,
/// round(f*n*T) are confusers (half each kind); positives fill half of all
/// steps while f <= 0.5 and the remainder otherwise. The pooled steps are
/// shuffled and dealt out in order; the last val_fraction of sequences is
/// the validation split.
std::vector<SynthSequence> plan_synthetic(const SynthConfig& cfg);

/// T * 8000 samples at 16 kHz: a harmonic tone under a syllable-rate
/// envelope during speech steps, over Gaussian background noise throughout.
std::vector<double> render_audio(const SynthConfig& cfg, const SynthSequence& seq);

/// [T, 5, S, S] grayscale in about [0, 1]: a static face whose mouth patch
/// darkens with the same envelope as the audio when the mouth moves.
Tensor<float> render_video(const SynthConfig& cfg, const SynthSequence& seq);

/// Writes manifest.jsonl, videos/<id>.avtb and audio/<id>.wav under `dir`
/// and returns the manifest records.
std::vector<io::ManifestRecord> write_synthetic(const SynthConfig& cfg, const std::filesystem::path& dir);

}  // namespace avasd::data
