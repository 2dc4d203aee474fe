#include "avasd/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>

#include "avasd/cli/commands.hpp"
#include "avasd/core/error.hpp"

namespace avasd::cli {

namespace {

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kArgument: return kExitUsage;
    case ErrorKind::kNumeric: return kExitNumeric;
    case ErrorKind::kShape:
    case ErrorKind::kFormat:
    case ErrorKind::kIo: return kExitData;
  }
  return kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audiovisual active speaker detection: synthetic data, training, evaluation, timing", "avasd"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file supplying option values (flags on the command line win)");
  app.get_formatter()->column_width(34);

  std::function<void()> action;
  std::optional<std::uint64_t> seed_shown;

  data::SynthConfig synth;
  synth.image_size = 24;
  std::filesystem::path synth_out;
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic audiovisual dataset (manifest, face clips, WAV)");
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--n", synth.n_sequences, "Number of sequences")->capture_default_str();
  gen->add_option("--seq-len", synth.seq_len, "Steps per sequence (0.5 s each)")->capture_default_str();
  gen->add_option("--confusers", synth.confuser_fraction, "Fraction of single-modality distractor steps")
      ->capture_default_str();
  gen->add_option("--snr-db", synth.snr_db, "Speech to background noise ratio")->capture_default_str();
  gen->add_option("--image-size", synth.image_size, "Face crop side in pixels")->capture_default_str();
  gen->add_option("--val-fraction", synth.val_fraction, "Share of sequences in the val split")->capture_default_str();
  gen->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  gen->callback([&] {
    seed_shown = synth.seed;
    action = [&] {
      synth.validate();
      gen_synth(synth, synth_out, out);
    };
  });

  ExtractOptions ext;
  auto* mfcc = app.add_subcommand("extract-mfcc", "MFCC of a mono PCM16 WAV file, saved as a tensor blob");
  mfcc->add_option("--wav", ext.wav, "Input WAV")->required();
  mfcc->add_option("--out", ext.out, "Output tensor blob [frames, 13]")->required();
  mfcc->add_option("--n-mels", ext.n_mels, "Mel filters")->capture_default_str();
  mfcc->add_option("--n-fft", ext.n_fft, "FFT size")->capture_default_str();
  mfcc->callback([&] { action = [&] { extract_mfcc(ext, out); }; });

  TrainOptions tr;
  auto* trn = app.add_subcommand("train", "Train a detector with early stopping on val AUC");
  trn->add_option("--data", tr.data, "Dataset directory")->required();
  trn->add_option("--variant", tr.variant, "Audio front end: m1 (raw MFCC), m2 (2 fc), m3 (conv)")
      ->capture_default_str();
  trn->add_option("--bigru-layers", tr.bigru_layers, "BiGRU layers per stream (1 or 2)")->capture_default_str();
  trn->add_option("--out", tr.out, "Checkpoint to write")->required();
  trn->add_option("--profile", tr.profile, "Layer widths: desk, paper or tiny")->capture_default_str();
  trn->add_option("--lr", tr.train.learning_rate, "Learning rate")->capture_default_str();
  trn->add_option("--momentum", tr.train.momentum, "SGD momentum")->capture_default_str();
  trn->add_option("--patience", tr.train.patience, "Epochs without improvement before stopping")
      ->capture_default_str();
  trn->add_option("--batch", tr.train.batch_size, "Sequences per batch (even)")->capture_default_str();
  trn->add_option("--max-epochs", tr.train.max_epochs, "Upper bound on epochs")->capture_default_str();
  trn->add_option("--seed", tr.train.seed, "Random seed")->capture_default_str();
  trn->callback([&] {
    seed_shown = tr.train.seed;
    action = [&] { (void)train_command(tr, out); };
  });

  EvalOptions ev;
  auto* evl = app.add_subcommand("eval", "Per-head AUC and accuracy of a checkpoint");
  evl->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  evl->add_option("--data", ev.data, "Dataset directory")->required();
  evl->add_option("--split", ev.split, "train, val or all")->capture_default_str();
  evl->add_flag("--noise", ev.noise, "Add Gaussian noise at the signal's RMS level before MFCC");
  evl->add_option("--noise-seed", ev.noise_seed, "Seed of the injected noise")->capture_default_str();
  evl->add_option("--report", ev.report, "Report path (default: next to the checkpoint)");
  evl->callback([&] {
    seed_shown = ev.noise_seed;
    action = [&] { (void)eval_command(ev, out); };
  });

  BenchOptions bo;
  auto* bch = app.add_subcommand("bench", "Single-threaded inference latency");
  auto* ckpt_opt = bch->add_option("--ckpt", bo.ckpt, "Checkpoint to time");
  bch->add_option("--profile", bo.profile, "Without --ckpt: random weights at this size")->capture_default_str()
      ->excludes(ckpt_opt);
  bch->add_option("--variant", bo.variant, "Without --ckpt: audio front end")->capture_default_str()->excludes(ckpt_opt);
  bch->add_option("--bigru-layers", bo.bigru_layers, "Without --ckpt: BiGRU layers per stream")
      ->capture_default_str()
      ->excludes(ckpt_opt);
  bch->add_option("--reps", bo.bench.reps, "Timed repetitions (>= 10)")->capture_default_str();
  bch->add_option("--warmup", bo.bench.warmup, "Untimed warm-up passes")->capture_default_str();
  bch->add_option("--steps", bo.bench.steps, "Time steps per forward pass")->capture_default_str();
  bch->add_flag("--with-dsp", bo.bench.include_dsp, "Include MFCC extraction in the timed region");
  bch->add_option("--seed", bo.bench.seed, "Seed of the random input")->capture_default_str();
  bch->callback([&] {
    seed_shown = bo.bench.seed;
    action = [&] { (void)bench_command(bo, out); };
  });

  AblateOptions ab;
  auto* abl = app.add_subcommand("ablate", "Train, evaluate and time all variants with 1 and 2 BiGRU layers");
  abl->add_option("--data", ab.data, "Dataset directory")->required();
  abl->add_option("--out", ab.out, "Output directory for checkpoints, reports and the table")->required();
  abl->add_option("--profile", ab.profile, "Layer widths: desk, paper or tiny")->capture_default_str();
  abl->add_option("--lr", ab.train.learning_rate, "Learning rate")->capture_default_str();
  abl->add_option("--momentum", ab.train.momentum, "SGD momentum")->capture_default_str();
  abl->add_option("--patience", ab.train.patience, "Early stopping patience")->capture_default_str();
  abl->add_option("--batch", ab.train.batch_size, "Sequences per batch (even)")->capture_default_str();
  abl->add_option("--max-epochs", ab.train.max_epochs, "Upper bound on epochs")->capture_default_str();
  abl->add_option("--noise-seed", ab.noise_seed, "Seed of the injected noise")->capture_default_str();
  abl->add_option("--reps", ab.bench_reps, "Timed repetitions")->capture_default_str();
  abl->add_option("--warmup", ab.bench_warmup, "Untimed warm-up passes")->capture_default_str();
  abl->add_option("--seed", ab.train.seed, "Random seed")->capture_default_str();
  abl->callback([&] {
    seed_shown = ab.train.seed;
    action = [&] {
      ab.threads = threads_from_env();
      out << "threads = " << ab.threads << '\n';
      (void)ablate_command(ab, out);
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    out << "# " << sub->get_name() << " configuration\n" << sub->config_to_str(true, false);
    if (seed_shown) {
      out << "seed = " << *seed_shown << '\n';
    } else {
      out << "seed = none (no randomness)\n";
    }
    out.flush();
    action();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace avasd::cli
