#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avasd/data/dataset.hpp"
#include "avasd/model/asd_model.hpp"

namespace avasd {

/// Area under the ROC curve by the trapezoid rule over unique thresholds;
/// tied scores contribute half. Throws ArgumentError unless both classes
/// are present.
double compute_auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of steps where (score >= 0.5) matches the label.
double accuracy_at_half(std::span<const double> scores, std::span<const int> labels);

struct LatencyStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::size_t reps = 0;
  std::size_t warmup = 0;
  std::vector<double> samples_ms;
};

struct EvalReport {
  std::string variant;
  std::size_t bigru_layers = 0;
  double auc_av = 0.0, auc_a = 0.0, auc_v = 0.0;
  double acc_av = 0.0, acc_a = 0.0, acc_v = 0.0;
  std::size_t n_sequences = 0;
  std::size_t n_steps = 0;
  bool noisy = false;
  std::uint64_t noise_seed = 0;
  std::size_t silent_records = 0;  // records left untouched by the noise injector
  std::optional<LatencyStats> latency;
};

/// Plain `key = value` lines; see docs/formats.md.
std::string to_text(const EvalReport& report);
EvalReport parse_eval_report(std::string_view text);

/// Per-step probabilities of the three heads in inference mode.
struct HeadScores {
  std::vector<double> av, a, v;
  std::vector<int> labels;
};

template <typename T>
HeadScores score_sequences(AsdModel<T>& model, std::span<const data::AvSequence> seqs,
                           std::size_t batch_size = 32);

/// Expects features already normalized with the model's statistics.
template <typename T>
EvalReport evaluate(AsdModel<T>& model, std::span<const data::AvSequence> seqs);

/// Regenerates each sequence's waveform, adds RMS-level Gaussian noise
/// (fresh per record, from `seed`), re-extracts and normalizes the MFCC
/// tiles with the model's audio statistics, then evaluates. Video is used
/// as stored.
template <typename T>
EvalReport evaluate_noisy(AsdModel<T>& model, std::span<const data::AvSequence> seqs,
                          const dsp::MfccExtractor& extractor, std::uint64_t seed);

}  // namespace avasd
