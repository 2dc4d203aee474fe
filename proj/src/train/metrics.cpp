#include "avasd/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "avasd/core/error.hpp"
#include "avasd/train/batching.hpp"
#include "avasd/train/noise.hpp"

namespace avasd {

double compute_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ArgumentError("AUC: " + std::to_string(scores.size()) + " scores but " +
                        std::to_string(labels.size()) + " labels");
  }
  std::size_t n_pos = 0;
  for (double s : scores)
    if (std::isnan(s)) throw NumericError("AUC: NaN score");
  for (int l : labels) {
    if (l != 0 && l != 1) throw ArgumentError("AUC: labels must be 0 or 1");
    n_pos += l;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ArgumentError("AUC needs both classes present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Lower the threshold one unique score at a time; each step moves the ROC
  // point by (fp, tp) and adds the trapezoid under that segment.
  double area = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t dtp = 0, dfp = 0;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] ? dtp : dfp)++;
    area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
    tp += dtp;
    fp += dfp;
  }
  return area / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy_at_half(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) throw ArgumentError("accuracy: size mismatch or empty");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) hit += (scores[i] >= 0.5 ? 1 : 0) == labels[i];
  return static_cast<double>(hit) / static_cast<double>(scores.size());
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError("eval report: " + key + " = \"" + v + "\" is not a number");
  }
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0 || d != std::floor(d)) throw FormatError("eval report: " + key + " must be a non-negative integer");
  return static_cast<std::size_t>(d);
}

}  // namespace

std::string to_text(const EvalReport& r) {
  std::ostringstream os;
  os << "variant = " << r.variant << '\n'
     << "bigru_layers = " << r.bigru_layers << '\n'
     << "noise_condition = " << (r.noisy ? "noisy" : "clean") << '\n';
  if (r.noisy) os << "noise_seed = " << r.noise_seed << '\n' << "silent_records = " << r.silent_records << '\n';
  os << "n_sequences = " << r.n_sequences << '\n'
     << "n_steps = " << r.n_steps << '\n'
     << "auc_av = " << fmt(r.auc_av) << '\n'
     << "auc_a = " << fmt(r.auc_a) << '\n'
     << "auc_v = " << fmt(r.auc_v) << '\n'
     << "acc_av = " << fmt(r.acc_av) << '\n'
     << "acc_a = " << fmt(r.acc_a) << '\n'
     << "acc_v = " << fmt(r.acc_v) << '\n';
  if (r.latency) {
    const LatencyStats& l = *r.latency;
    os << "latency.mean_ms = " << fmt(l.mean_ms) << '\n'
       << "latency.median_ms = " << fmt(l.median_ms) << '\n'
       << "latency.p95_ms = " << fmt(l.p95_ms) << '\n'
       << "latency.min_ms = " << fmt(l.min_ms) << '\n'
       << "latency.max_ms = " << fmt(l.max_ms) << '\n'
       << "latency.reps = " << l.reps << '\n'
       << "latency.warmup = " << l.warmup << '\n';
  }
  return os.str();
}

EvalReport parse_eval_report(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      throw FormatError("eval report line " + std::to_string(line_no) + ": expected \"key = value\"");
    }
    if (!kv.emplace(line.substr(0, eq), line.substr(eq + 3)).second) {
      throw FormatError("eval report line " + std::to_string(line_no) + ": duplicate key " + line.substr(0, eq));
    }
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("eval report: missing key " + key);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  EvalReport r;
  r.variant = take("variant");
  r.bigru_layers = to_size("bigru_layers", take("bigru_layers"));
  const std::string cond = take("noise_condition");
  if (cond != "clean" && cond != "noisy") throw FormatError("eval report: noise_condition must be clean or noisy");
  r.noisy = cond == "noisy";
  if (r.noisy) {
    r.noise_seed = to_size("noise_seed", take("noise_seed"));
    r.silent_records = to_size("silent_records", take("silent_records"));
  }
  r.n_sequences = to_size("n_sequences", take("n_sequences"));
  r.n_steps = to_size("n_steps", take("n_steps"));
  r.auc_av = to_double("auc_av", take("auc_av"));
  r.auc_a = to_double("auc_a", take("auc_a"));
  r.auc_v = to_double("auc_v", take("auc_v"));
  r.acc_av = to_double("acc_av", take("acc_av"));
  r.acc_a = to_double("acc_a", take("acc_a"));
  r.acc_v = to_double("acc_v", take("acc_v"));
  if (kv.count("latency.median_ms")) {
    LatencyStats l;
    l.mean_ms = to_double("latency.mean_ms", take("latency.mean_ms"));
    l.median_ms = to_double("latency.median_ms", take("latency.median_ms"));
    l.p95_ms = to_double("latency.p95_ms", take("latency.p95_ms"));
    l.min_ms = to_double("latency.min_ms", take("latency.min_ms"));
    l.max_ms = to_double("latency.max_ms", take("latency.max_ms"));
    l.reps = to_size("latency.reps", take("latency.reps"));
    l.warmup = to_size("latency.warmup", take("latency.warmup"));
    r.latency = l;
  }
  if (!kv.empty()) throw FormatError("eval report: unknown key " + kv.begin()->first);
  return r;
}

template <typename T>
HeadScores score_sequences(AsdModel<T>& model, std::span<const data::AvSequence> seqs, std::size_t batch_size) {
  if (seqs.empty()) throw ArgumentError("nothing to evaluate");
  if (batch_size == 0) throw ArgumentError("evaluation batch size must be positive");
  HeadScores out;
  auto prob = [](const Tensor<T>& logits, std::vector<double>& dst) {
    for (std::size_t r = 0; r < logits.dim(0); ++r) {
      // softmax of two logits, P(class 1)
      const double d = static_cast<double>(logits(r, 0)) - static_cast<double>(logits(r, 1));
      dst.push_back(1.0 / (1.0 + std::exp(d)));
    }
  };
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < seqs.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(seqs.size(), start + batch_size); ++i) idx.push_back(i);
    const AvBatch<T> batch = make_batch<T>(seqs, idx);
    const HeadLogits<T> logits = model.forward(batch, Mode::kInfer);
    prob(logits.av, out.av);
    prob(logits.a, out.a);
    prob(logits.v, out.v);
    out.labels.insert(out.labels.end(), batch.labels.begin(), batch.labels.end());
  }
  for (const auto* s : {&out.av, &out.a, &out.v})
    for (double p : *s)
      if (!std::isfinite(p)) throw NumericError("model produced a non-finite probability");
  return out;
}

template <typename T>
EvalReport evaluate(AsdModel<T>& model, std::span<const data::AvSequence> seqs) {
  const HeadScores s = score_sequences(model, seqs);
  EvalReport r;
  r.variant = to_string(model.config().variant);
  r.bigru_layers = model.config().stream_bigru_layers;
  r.n_sequences = seqs.size();
  r.n_steps = s.labels.size();
  r.auc_av = compute_auc(s.av, s.labels);
  r.auc_a = compute_auc(s.a, s.labels);
  r.auc_v = compute_auc(s.v, s.labels);
  r.acc_av = accuracy_at_half(s.av, s.labels);
  r.acc_a = accuracy_at_half(s.a, s.labels);
  r.acc_v = accuracy_at_half(s.v, s.labels);
  return r;
}

template <typename T>
EvalReport evaluate_noisy(AsdModel<T>& model, std::span<const data::AvSequence> seqs,
                          const dsp::MfccExtractor& extractor, std::uint64_t seed) {
  std::vector<data::AvSequence> noisy(seqs.begin(), seqs.end());
  std::size_t silent = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    data::AvSequence& s = noisy[i];
    if (!s.waveform) throw ArgumentError("sequence " + s.id + " has no waveform to perturb");
    Prng prng = Prng::for_stream(seed, i);
    const NoisyWaveform w = add_gaussian_noise(s.waveform(), prng);
    silent += w.zero_signal;
    s.audio = data::audio_features(w.samples, s.steps(), extractor);
    data::apply_audio_stats(s.audio, model.audio_norm);
  }
  EvalReport r = evaluate(model, std::span<const data::AvSequence>(noisy));
  r.noisy = true;
  r.noise_seed = seed;
  r.silent_records = silent;
  return r;
}

template HeadScores score_sequences(AsdModel<float>&, std::span<const data::AvSequence>, std::size_t);
template HeadScores score_sequences(AsdModel<double>&, std::span<const data::AvSequence>, std::size_t);
template EvalReport evaluate(AsdModel<float>&, std::span<const data::AvSequence>);
template EvalReport evaluate(AsdModel<double>&, std::span<const data::AvSequence>);
template EvalReport evaluate_noisy(AsdModel<float>&, std::span<const data::AvSequence>, const dsp::MfccExtractor&,
                                   std::uint64_t);
template EvalReport evaluate_noisy(AsdModel<double>&, std::span<const data::AvSequence>, const dsp::MfccExtractor&,
                                   std::uint64_t);

}  // namespace avasd
