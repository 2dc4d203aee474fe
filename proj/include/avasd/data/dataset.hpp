#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "avasd/core/tensor.hpp"
#include "avasd/data/synthetic.hpp"
#include "avasd/dsp/mfcc.hpp"

namespace avasd::data {

/// One training/evaluation unit of T steps.
struct AvSequence {
  std::string id;
  Tensor<float> video;  // [T, 5, S, S]
  Tensor<float> audio;  // [T, 13, 20] MFCC tiles
  std::vector<int> labels;
  /// Re-reads the raw waveform, for evaluation with a perturbed signal.
  std::function<std::vector<double>()> waveform;

  std::size_t steps() const { return labels.size(); }
};

struct AvDataset {
  std::vector<AvSequence> train;
  std::vector<AvSequence> val;
};

/// One pair of scalar statistics per modality.
struct FeatureStats {
  dsp::NormStats video;
  dsp::NormStats audio;
};

/// MFCC over the whole waveform, then one 13x20 tile per step.
Tensor<float> audio_features(std::span<const double> waveform, std::size_t steps,
                             const dsp::MfccExtractor& extractor);

/// Fits statistics on `fit` and applies them to `fit` and `apply_only`.
FeatureStats normalize_dataset(std::vector<AvSequence>& fit, std::vector<AvSequence>& apply_only);

void apply_stats(std::span<AvSequence> seqs, const FeatureStats& stats);
void apply_audio_stats(Tensor<float>& audio, const dsp::NormStats& stats);

/// Renders the synthetic set in memory (features raw, not normalized).
AvDataset synthesize_dataset(const SynthConfig& cfg, const dsp::MfccExtractor& extractor);

/// Reads a directory written by write_synthetic (or any conforming
/// manifest). Label count must match the video's T and the audio length.
AvDataset load_dataset(const std::filesystem::path& dir, const dsp::MfccExtractor& extractor);

}  // namespace avasd::data
