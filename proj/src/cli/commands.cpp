#include "avasd/cli/commands.hpp"

#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "avasd/core/error.hpp"
#include "avasd/data/dataset.hpp"
#include "avasd/io/bytes.hpp"
#include "avasd/io/tensor_blob.hpp"
#include "avasd/io/wav.hpp"
#include "avasd/model/asd_model.hpp"

namespace avasd::cli {

namespace fs = std::filesystem;

std::size_t threads_from_env() {
  const char* v = std::getenv("AVASD_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) {
    throw ArgumentError(std::string("AVASD_THREADS must be an integer in [1, 1024], got \"") + v + "\"");
  }
  return static_cast<std::size_t>(n);
}

void gen_synth(const data::SynthConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto records = data::write_synthetic(cfg, out);
  std::size_t val = 0;
  for (const auto& r : records) val += r.split == io::Split::kVal;
  log << "wrote " << records.size() << " sequences (" << records.size() - val << " train, " << val << " val) to "
      << out.string() << '\n';
}

void extract_mfcc(const ExtractOptions& opt, std::ostream& log) {
  const io::WavAudio wav = io::read_wav(opt.wav);
  dsp::MfccConfig mc;
  mc.sample_rate_hz = wav.sample_rate_hz;
  mc.n_mels = opt.n_mels;
  mc.n_fft = opt.n_fft;
  mc.fmax_hz = std::min(mc.fmax_hz, wav.sample_rate_hz / 2.0);
  const dsp::MfccExtractor ex(mc);
  const Tensor<double> coeffs = ex.compute(wav.samples);
  io::save_blob(opt.out, coeffs);
  log << "mfcc " << shape_to_string(coeffs.shape()) << " from " << wav.samples.size() << " samples at "
      << wav.sample_rate_hz << " Hz -> " << opt.out.string() << '\n';
}

namespace {

void check_compatible(const ModelConfig& mc, const data::AvSequence& sample, const std::string& what) {
  const auto& vs = sample.video.shape();
  const auto& as = sample.audio.shape();
  if (vs[1] != mc.frames_per_step || vs[2] != mc.image_size || vs[3] != mc.image_size) {
    throw ArgumentError("data has " + std::to_string(vs[1]) + " frames of " + std::to_string(vs[2]) + "x" +
                        std::to_string(vs[3]) + " per step but " + what + " expects " +
                        std::to_string(mc.frames_per_step) + " of " + std::to_string(mc.image_size) + "x" +
                        std::to_string(mc.image_size) + " (regenerate with gen-synth --image-size or pick another profile)");
  }
  if (as[1] != mc.mfcc_coeffs || as[2] != mc.mfcc_frames) {
    throw ArgumentError("data has " + std::to_string(as[1]) + "x" + std::to_string(as[2]) + " MFCC tiles but " +
                        what + " expects " + std::to_string(mc.mfcc_coeffs) + "x" + std::to_string(mc.mfcc_frames));
  }
}

ModelConfig config_for(const std::string& profile, Variant v, std::size_t layers, const data::AvSequence& sample) {
  ModelConfig mc = ModelConfig::profile(profile, v);
  mc.stream_bigru_layers = layers;
  mc.seq_len = sample.steps();
  check_compatible(mc, sample, "profile " + profile);
  mc.validate();
  return mc;
}

std::size_t parse_layers(std::size_t layers) {
  if (layers != 1 && layers != 2) throw ArgumentError("--bigru-layers must be 1 or 2");
  return layers;
}

struct Prepared {
  data::AvDataset ds;
  data::FeatureStats stats;
};

Prepared load_and_normalize(const fs::path& dir, const dsp::MfccExtractor& ex) {
  Prepared p;
  p.ds = data::load_dataset(dir, ex);
  if (p.ds.train.empty() || p.ds.val.empty()) {
    throw FormatError("dataset in " + dir.string() + " needs both a train and a val split");
  }
  p.stats = data::normalize_dataset(p.ds.train, p.ds.val);
  return p;
}

TrainHistory fit(AsdModel<double>& model, const Prepared& p, const TrainConfig& tc, std::ostream& log,
                 std::mutex* log_mutex, const std::string& tag) {
  model.video_norm = p.stats.video;
  model.audio_norm = p.stats.audio;
  return train(model, p.ds.train, av_auc_evaluator(p.ds.val), tc, [&](const EpochRecord& r) {
    std::ostringstream line;
    line << tag << "epoch " << r.epoch << "  loss " << std::fixed << std::setprecision(4) << r.mean_loss
         << "  val_auc_av " << r.val_auc << (r.improved ? "  *" : "") << "  (" << std::setprecision(1) << r.seconds
         << " s)\n";
    std::unique_lock<std::mutex> lock;
    if (log_mutex) lock = std::unique_lock<std::mutex>(*log_mutex);
    log << line.str() << std::flush;
  });
}

}  // namespace

TrainHistory train_command(const TrainOptions& opt, std::ostream& log) {
  const Variant v = parse_variant(opt.variant);
  const std::size_t layers = parse_layers(opt.bigru_layers);
  opt.train.validate();
  const dsp::MfccExtractor ex;
  const Prepared p = load_and_normalize(opt.data, ex);
  const ModelConfig mc = config_for(opt.profile, v, layers, p.ds.train.front());
  log << "train " << p.ds.train.size() << " sequences, val " << p.ds.val.size() << ", " << mc.seq_len
      << " steps each\n";
  AsdModel<double> model(mc, opt.train.seed);
  log << "parameters " << model.parameter_count() << '\n';
  const TrainHistory h = fit(model, p, opt.train, log, nullptr, "");
  save_model(model, opt.out);
  log << "best epoch " << h.best_epoch << " (val_auc_av " << h.best_val_auc << ")"
      << (h.stopped_early ? ", stopped early" : "") << "; saved " << opt.out.string() << '\n';
  return h;
}

EvalReport eval_command(const EvalOptions& opt, std::ostream& out) {
  if (opt.split != "val" && opt.split != "train" && opt.split != "all") {
    throw ArgumentError("--split must be train, val or all");
  }
  AsdModel<double> model = load_model<double>(opt.ckpt);
  const dsp::MfccExtractor ex;
  data::AvDataset ds = data::load_dataset(opt.data, ex);
  std::vector<data::AvSequence> seqs;
  if (opt.split != "train") seqs = std::move(ds.val);
  if (opt.split != "val")
    for (auto& s : ds.train) seqs.push_back(std::move(s));
  if (seqs.empty()) throw FormatError("no " + opt.split + " sequences in " + opt.data.string());
  check_compatible(model.config(), seqs.front(), "the checkpoint");
  data::apply_stats(seqs, {model.video_norm, model.audio_norm});

  const EvalReport r = opt.noise ? evaluate_noisy(model, std::span<const data::AvSequence>(seqs), ex, opt.noise_seed)
                                 : evaluate(model, std::span<const data::AvSequence>(seqs));
  const std::string text = to_text(r);
  fs::path report = opt.report;
  if (report.empty()) report = fs::path(opt.ckpt).concat(opt.noise ? ".noisy.txt" : ".eval.txt");
  io::write_text_file(report, text);
  out << text;
  return r;
}

LatencyStats bench_command(const BenchOptions& opt, std::ostream& out) {
  opt.bench.validate();
  AsdModel<float> model = [&] {
    if (!opt.ckpt.empty()) return load_model<float>(opt.ckpt);
    ModelConfig mc = ModelConfig::profile(opt.profile, parse_variant(opt.variant));
    mc.stream_bigru_layers = parse_layers(opt.bigru_layers);
    return AsdModel<float>(mc, opt.bench.seed);
  }();
  const LatencyStats s = benchmark_inference(model, opt.bench);
  out << "variant = " << to_string(model.config().variant) << '\n'
      << "bigru_layers = " << model.config().stream_bigru_layers << '\n'
      << "steps = " << opt.bench.steps << '\n'
      << "include_dsp = " << (opt.bench.include_dsp ? "true" : "false") << '\n'
      << std::setprecision(6) << "latency.mean_ms = " << s.mean_ms << '\n'
      << "latency.median_ms = " << s.median_ms << '\n'
      << "latency.p95_ms = " << s.p95_ms << '\n'
      << "latency.min_ms = " << s.min_ms << '\n'
      << "latency.max_ms = " << s.max_ms << '\n'
      << "latency.reps = " << s.reps << '\n'
      << "latency.warmup = " << s.warmup << '\n';
  return s;
}

std::vector<AblationRow> ablate_command(const AblateOptions& opt, std::ostream& log) {
  opt.train.validate();
  if (opt.threads == 0) throw ArgumentError("thread count must be positive");
  const dsp::MfccExtractor ex;
  const Prepared p = load_and_normalize(opt.data, ex);
  fs::create_directories(opt.out);

  std::vector<AblationRow> rows;
  std::vector<AsdModel<double>> models;
  for (Variant v : {Variant::kM1, Variant::kM2, Variant::kM3})
    for (std::size_t layers : {2u, 1u}) {
      AblationRow row;
      row.variant = v;
      row.bigru_layers = layers;
      rows.push_back(row);
      models.emplace_back(config_for(opt.profile, v, layers, p.ds.train.front()), opt.train.seed);
    }

  // Cells share only read-only data; each owns its model.
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(rows.size());
  auto worker = [&] {
    for (std::size_t i; (i = next++) < rows.size();) {
      try {
        AblationRow& row = rows[i];
        const std::string tag = std::string("[") + to_string(row.variant) + " x" + std::to_string(row.bigru_layers) + "] ";
        const TrainHistory h = fit(models[i], p, opt.train, log, &log_mutex, tag);
        row.epochs = h.epochs.size();
        const std::string stem = std::string(to_string(row.variant)) + "_l" + std::to_string(row.bigru_layers);
        save_model(models[i], opt.out / (stem + ".ckpt"));
        row.clean = evaluate(models[i], std::span<const data::AvSequence>(p.ds.val));
        row.noisy = evaluate_noisy(models[i], std::span<const data::AvSequence>(p.ds.val), ex, opt.noise_seed);
        io::write_text_file(opt.out / (stem + ".eval.txt"), to_text(row.clean));
        io::write_text_file(opt.out / (stem + ".noisy.txt"), to_text(row.noisy));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(opt.threads, rows.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Timing runs alone, after training, on one thread.
  std::vector<AsdModel<float>> fmodels;
  for (auto& m : models) fmodels.push_back(convert_model<float>(m));
  std::vector<AsdModel<float>*> ptrs;
  for (auto& m : fmodels) ptrs.push_back(&m);
  BenchConfig bc;
  bc.reps = opt.bench_reps;
  bc.warmup = opt.bench_warmup;
  bc.seed = opt.train.seed;
  const auto lat = benchmark_interleaved(ptrs, bc);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].latency = lat[i];

  std::ostringstream summary;
  for (const auto& r : rows) {
    EvalReport rep = r.clean;
    rep.latency = r.latency;
    summary << "[" << to_string(r.variant) << "_l" << r.bigru_layers << "]\n"
            << "epochs = " << r.epochs << '\n'
            << to_text(rep) << "noisy_auc_av = " << r.noisy.auc_av << '\n'
            << "noisy_auc_a = " << r.noisy.auc_a << "\n\n";
  }
  io::write_text_file(opt.out / "ablation.txt", summary.str());
  io::write_text_file(opt.out / "table.md", ablation_table(rows));
  log << ablation_table(rows);
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  struct Reference {
    const char* time;
    const char* video;
    const char* audio;
    const char* av;
  };
  auto reference = [](Variant v, std::size_t layers) -> Reference {
    const bool two = layers == 2;
    switch (v) {
      case Variant::kM1: return two ? Reference{"44.41", "80.774", "77.087", "87.940"} : Reference{"39.78", "79.651", "76.736", "87.480"};
      case Variant::kM2: return two ? Reference{"44.48", "80.577", "77.250", "86.847"} : Reference{"40.37", "76.130", "78.886", "86.859"};
      case Variant::kM3: return two ? Reference{"47.44", "81.669", "78.030", "88.929"} : Reference{"42.10", "77.856", "79.191", "88.069"};
    }
    return {"", "", "", ""};
  };
  auto audio_name = [](Variant v) {
    switch (v) {
      case Variant::kM1: return "MFCC";
      case Variant::kM2: return "MFCC+2fc";
      case Variant::kM3: return "MFCC+VGG-M";
    }
    return "";
  };
  std::ostringstream os;
  os << std::fixed;
  os << "| Model | Audio stream | Visual stream | BiGRU | Inf. time (ms) | Video AUC | Audio AUC | AV AUC | AV AUC, noisy |"
        " Published: Inf. time | Video | Audio | AV |\n"
     << "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    const Reference ref = reference(r.variant, r.bigru_layers);
    os << "| " << (r.variant == Variant::kM1 ? "M1" : r.variant == Variant::kM2 ? "M2" : "M3") << " | "
       << audio_name(r.variant) << " | VGG-M | " << r.bigru_layers << " | " << std::setprecision(2)
       << r.latency.median_ms << " | " << std::setprecision(3) << 100 * r.clean.auc_v << " | " << 100 * r.clean.auc_a
       << " | " << 100 * r.clean.auc_av << " | " << 100 * r.noisy.auc_av << " | " << ref.time << "ms | " << ref.video
       << " | " << ref.audio << " | " << ref.av << " |\n";
  }
  return os.str();
}

}  // namespace avasd::cli
