#include "avasd/train/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "avasd/core/error.hpp"
#include "avasd/dsp/mfcc.hpp"

namespace avasd {

void BenchConfig::validate() const {
  if (reps < 10) throw ArgumentError("benchmark needs at least 10 timed repetitions, got " + std::to_string(reps));
  if (steps == 0) throw ArgumentError("benchmark steps must be positive");
}

LatencyStats summarize_latency(std::vector<double> samples_ms, std::size_t warmup) {
  if (samples_ms.empty()) throw ArgumentError("no latency samples");
  LatencyStats s;
  s.reps = samples_ms.size();
  s.warmup = warmup;
  s.samples_ms = samples_ms;
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(n);
  s.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  s.min_ms = samples_ms.front();
  s.max_ms = samples_ms.back();
  return s;
}

namespace {

struct BenchInput {
  AvBatch<float> batch;
  std::vector<double> waveform;
};

BenchInput make_input(const ModelConfig& c, const BenchConfig& cfg) {
  Prng prng = Prng::for_stream(cfg.seed, 7);
  BenchInput in;
  in.batch.video = Tensor<float>({1, cfg.steps, c.frames_per_step, c.image_size, c.image_size});
  in.batch.audio = Tensor<float>({1, cfg.steps, c.mfcc_coeffs, c.mfcc_frames});
  for (float& v : in.batch.video.data()) v = static_cast<float>(prng.normal());
  for (float& v : in.batch.audio.data()) v = static_cast<float>(prng.normal());
  if (cfg.include_dsp) {
    // half a second of audio per step at 16 kHz
    in.waveform.resize(cfg.steps * 8000);
    for (double& x : in.waveform) x = 0.1 * prng.normal();
  }
  return in;
}

class Timed {
 public:
  Timed(AsdModel<float>& model, const BenchConfig& cfg) : model_(model), in_(make_input(model.config(), cfg)) {}

  double run_ms() {
    const auto t0 = std::chrono::steady_clock::now();
    if (!in_.waveform.empty()) sink_ += extractor_.compute(in_.waveform)[0];
    const HeadLogits<float> out = model_.forward(in_.batch, Mode::kInfer);
    const auto t1 = std::chrono::steady_clock::now();
    sink_ += out.av[0];
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  }

  double sink() const { return sink_; }

 private:
  AsdModel<float>& model_;
  BenchInput in_;
  dsp::MfccExtractor extractor_{dsp::MfccConfig{}};
  double sink_ = 0.0;
};

}  // namespace

std::vector<LatencyStats> benchmark_interleaved(std::span<AsdModel<float>* const> models, const BenchConfig& cfg) {
  cfg.validate();
  if (models.empty()) throw ArgumentError("no models to benchmark");
  std::vector<Timed> timers;
  timers.reserve(models.size());
  for (auto* m : models) timers.emplace_back(*m, cfg);
  for (std::size_t i = 0; i < cfg.warmup; ++i)
    for (auto& t : timers) (void)t.run_ms();
  std::vector<std::vector<double>> samples(models.size());
  for (std::size_t i = 0; i < cfg.reps; ++i) {
    // rotate the starting model so none is always first after a context switch
    for (std::size_t k = 0; k < timers.size(); ++k) {
      const std::size_t j = (i + k) % timers.size();
      samples[j].push_back(timers[j].run_ms());
    }
  }
  double sink = 0.0;
  for (auto& t : timers) sink += t.sink();
  if (!std::isfinite(sink)) throw NumericError("benchmark forward produced non-finite output");
  std::vector<LatencyStats> out;
  for (auto& s : samples) out.push_back(summarize_latency(std::move(s), cfg.warmup));
  return out;
}

LatencyStats benchmark_inference(AsdModel<float>& model, const BenchConfig& cfg) {
  AsdModel<float>* one[] = {&model};
  return benchmark_interleaved(one, cfg).front();
}

}  // namespace avasd
