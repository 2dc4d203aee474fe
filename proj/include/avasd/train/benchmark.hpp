#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "avasd/model/asd_model.hpp"
#include "avasd/train/metrics.hpp"

namespace avasd {

struct BenchConfig {
  std::size_t reps = 100;
  std::size_t warmup = 10;
  std::size_t steps = 1;  // time steps per forward pass, batch of one sequence
  std::uint64_t seed = 1;
  /// Also time MFCC extraction of the matching waveform span per pass.
  bool include_dsp = false;

  void validate() const;
};

/// Summary statistics of raw millisecond samples (nearest-rank p95).
LatencyStats summarize_latency(std::vector<double> samples_ms, std::size_t warmup);

/// Wall-clock time of one inference forward pass on a fixed random input,
/// reused across repetitions.
LatencyStats benchmark_inference(AsdModel<float>& model, const BenchConfig& cfg);

/// Same measurement for several models, alternating between them on every
/// repetition so slow drifts in machine state hit all of them alike.
std::vector<LatencyStats> benchmark_interleaved(std::span<AsdModel<float>* const> models, const BenchConfig& cfg);

}  // namespace avasd
