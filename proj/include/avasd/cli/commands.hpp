#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "avasd/data/synthetic.hpp"
#include "avasd/model/config.hpp"
#include "avasd/train/benchmark.hpp"
#include "avasd/train/metrics.hpp"
#include "avasd/train/trainer.hpp"

namespace avasd::cli {

struct ExtractOptions {
  std::filesystem::path wav;
  std::filesystem::path out;
  std::size_t n_mels = 40;
  std::size_t n_fft = 512;
};

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::string variant = "m1";
  std::size_t bigru_layers = 2;
  std::string profile = "desk";
  TrainConfig train;
};

struct EvalOptions {
  std::filesystem::path ckpt;
  std::filesystem::path data;
  std::filesystem::path report;  // empty: next to the checkpoint
  std::string split = "val";
  bool noise = false;
  std::uint64_t noise_seed = 1;
};

struct BenchOptions {
  std::filesystem::path ckpt;  // or, when empty, random weights of `profile`
  std::string profile = "paper";
  std::string variant = "m1";
  std::size_t bigru_layers = 2;
  BenchConfig bench;
};

struct AblateOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::string profile = "desk";
  TrainConfig train;
  std::uint64_t noise_seed = 1;
  std::size_t bench_reps = 100;
  std::size_t bench_warmup = 10;
  std::size_t threads = 1;
};

void gen_synth(const data::SynthConfig& cfg, const std::filesystem::path& out, std::ostream& log);
void extract_mfcc(const ExtractOptions& opt, std::ostream& log);
TrainHistory train_command(const TrainOptions& opt, std::ostream& log);
EvalReport eval_command(const EvalOptions& opt, std::ostream& out);
LatencyStats bench_command(const BenchOptions& opt, std::ostream& out);

struct AblationRow {
  Variant variant = Variant::kM1;
  std::size_t bigru_layers = 2;
  EvalReport clean;
  EvalReport noisy;
  LatencyStats latency;
  std::size_t epochs = 0;
};

/// Trains and evaluates the six variant x depth cells, then times them.
std::vector<AblationRow> ablate_command(const AblateOptions& opt, std::ostream& log);

/// Markdown table in the layout of the published comparison, with its
/// reference numbers alongside.
std::string ablation_table(const std::vector<AblationRow>& rows);

/// AVASD_THREADS, or 1 when unset. Throws ArgumentError if malformed.
std::size_t threads_from_env();

}  // namespace avasd::cli
