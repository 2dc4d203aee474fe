#include "avasd/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "avasd/core/error.hpp"
#include "avasd/core/prng.hpp"
#include "avasd/io/tensor_blob.hpp"
#include "avasd/io/wav.hpp"

namespace avasd::data {

std::size_t SynthConfig::samples_per_step() const {
  return static_cast<std::size_t>(std::lround(kStepSeconds * sample_rate_hz));
}

void SynthConfig::validate() const {
  if (n_sequences == 0 || seq_len == 0) throw ArgumentError("need at least one sequence of one step");
  if (!(confuser_fraction >= 0.0 && confuser_fraction <= 1.0)) {
    throw ArgumentError("confuser fraction must lie in [0, 1]");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ArgumentError("val fraction must lie in [0, 1)");
  if (image_size < 8) throw ArgumentError("image size must be at least 8");
  if (sample_rate_hz < 8000) throw ArgumentError("sample rate must be at least 8 kHz");
  if (!std::isfinite(snr_db)) throw ArgumentError("snr must be finite");
}

namespace {

// Sub-streams per sequence: identity, audio noise, pixel noise.
enum Stream : std::uint64_t { kIdentity = 0, kAudioNoise = 1, kPixelNoise = 2 };

Prng stream_for(const SynthConfig& cfg, std::size_t index, Stream s) {
  return Prng::for_stream(cfg.seed, 3 * static_cast<std::uint64_t>(index) + s + 1);
}

struct Persona {
  double pitch_hz;
  double syllable_hz;
  double phase;
  double loudness;
  double face_level;
  double backdrop_level;
  double mouth_rest;
  int shift_x;
  int shift_y;
};

Persona persona_of(const SynthConfig& cfg, std::size_t index) {
  Prng p = stream_for(cfg, index, kIdentity);
  Persona s{};
  s.pitch_hz = p.uniform(110.0, 260.0);
  s.syllable_hz = p.uniform(3.0, 5.0);
  s.phase = p.uniform(0.0, 2.0 * std::numbers::pi);
  s.loudness = p.uniform(0.2, 0.4);
  s.face_level = p.uniform(0.55, 0.8);
  s.backdrop_level = p.uniform(0.1, 0.3);
  s.mouth_rest = p.uniform(0.05, 0.2);
  const int jitter = std::max<int>(1, static_cast<int>(cfg.image_size / 24));
  s.shift_x = static_cast<int>(p.below(2 * jitter + 1)) - jitter;
  s.shift_y = static_cast<int>(p.below(2 * jitter + 1)) - jitter;
  return s;
}

// Mouth opening in [0.25, 1], shared by the audio amplitude and the video.
double envelope(const Persona& s, double t) {
  return 0.25 + 0.375 * (1.0 - std::cos(2.0 * std::numbers::pi * s.syllable_hz * t + s.phase));
}

constexpr double kHarmonics[] = {1.0, 0.5, 0.25};

double voice(const Persona& s, double t) {
  double v = 0.0;
  for (std::size_t h = 0; h < std::size(kHarmonics); ++h)
    v += kHarmonics[h] * std::sin(2.0 * std::numbers::pi * s.pitch_hz * static_cast<double>(h + 1) * t);
  return v / 1.75;
}

// RMS of voice() times envelope() over a long stretch, used to set the floor.
double nominal_speech_rms(const Persona& s) {
  double harm = 0.0;
  for (double a : kHarmonics) harm += a * a / 2.0;
  const double env_ms = 0.25 * 0.25 + 2 * 0.25 * 0.375 + 0.375 * 0.375 * 1.5;
  return s.loudness * std::sqrt(harm) / 1.75 * std::sqrt(env_ms);
}

}  // namespace

std::vector<SynthSequence> plan_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t total = cfg.n_sequences * cfg.seq_len;
  const auto confusers = static_cast<std::size_t>(std::llround(cfg.confuser_fraction * total));
  const std::size_t voice_over = confusers / 2;
  const std::size_t mouthing = confusers - voice_over;
  const std::size_t speaking = std::min(total / 2, total - confusers);
  const std::size_t silent = total - confusers - speaking;

  std::vector<StepKind> pool;
  pool.reserve(total);
  pool.insert(pool.end(), speaking, StepKind::kSpeaking);
  pool.insert(pool.end(), silent, StepKind::kSilent);
  pool.insert(pool.end(), voice_over, StepKind::kVoiceOver);
  pool.insert(pool.end(), mouthing, StepKind::kMouthing);
  Prng prng(cfg.seed);
  prng.shuffle(pool.begin(), pool.end());

  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * cfg.n_sequences));
  std::vector<SynthSequence> seqs(cfg.n_sequences);
  for (std::size_t i = 0; i < cfg.n_sequences; ++i) {
    SynthSequence& s = seqs[i];
    s.index = i;
    char id[32];
    std::snprintf(id, sizeof id, "seq%06zu", i);
    s.id = id;
    s.kinds.assign(pool.begin() + i * cfg.seq_len, pool.begin() + (i + 1) * cfg.seq_len);
    for (StepKind k : s.kinds) s.labels.push_back(label_of(k));
    s.split = i + n_val >= cfg.n_sequences ? io::Split::kVal : io::Split::kTrain;
  }
  return seqs;
}

std::vector<double> render_audio(const SynthConfig& cfg, const SynthSequence& seq) {
  const Persona who = persona_of(cfg, seq.index);
  Prng noise = stream_for(cfg, seq.index, kAudioNoise);
  const std::size_t per_step = cfg.samples_per_step();
  const double floor_sigma = nominal_speech_rms(who) / std::pow(10.0, cfg.snr_db / 20.0);
  const double dt = 1.0 / cfg.sample_rate_hz;
  std::vector<double> wave(per_step * seq.kinds.size());
  for (std::size_t t = 0; t < seq.kinds.size(); ++t) {
    const bool speech = has_speech(seq.kinds[t]);
    for (std::size_t i = 0; i < per_step; ++i) {
      const std::size_t n = t * per_step + i;
      const double time = static_cast<double>(n) * dt;
      double v = floor_sigma * noise.normal();
      if (speech) v += who.loudness * envelope(who, time) * voice(who, time);
      wave[n] = v;
    }
  }
  return wave;
}

Tensor<float> render_video(const SynthConfig& cfg, const SynthSequence& seq) {
  const Persona who = persona_of(cfg, seq.index);
  Prng pixels = stream_for(cfg, seq.index, kPixelNoise);
  const std::size_t S = cfg.image_size;
  const double s = static_cast<double>(S);
  const double cx = s / 2.0 + who.shift_x, cy = s / 2.0 + who.shift_y;
  const double rx = 0.35 * s, ry = 0.45 * s;
  const auto eye_row = static_cast<long>(std::lround(cy - 0.12 * s));
  const long eye_half = std::max<long>(1, std::lround(0.04 * s));
  const auto mouth_top = static_cast<long>(std::lround(cy + 0.16 * s));
  const long mouth_height = std::max<long>(2, std::lround(0.12 * s));
  const auto mouth_left = static_cast<long>(std::lround(cx - 0.14 * s));
  const auto mouth_right = static_cast<long>(std::lround(cx + 0.14 * s));

  // static face, reused for every frame
  std::vector<double> face(S * S);
  std::vector<bool> is_mouth(S * S, false);
  for (std::size_t y = 0; y < S; ++y)
    for (std::size_t x = 0; x < S; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      double v = dx * dx + dy * dy <= 1.0 ? who.face_level : who.backdrop_level;
      const long ly = static_cast<long>(y), lx = static_cast<long>(x);
      for (double ex : {cx - 0.14 * s, cx + 0.14 * s})
        if (std::abs(ly - eye_row) <= eye_half && std::abs(lx - std::lround(ex)) <= eye_half) v = 0.15;
      if (ly >= mouth_top && ly < mouth_top + mouth_height && lx >= mouth_left && lx <= mouth_right)
        is_mouth[y * S + x] = true;
      face[y * S + x] = v;
    }

  const std::size_t T = seq.kinds.size();
  Tensor<float> video({T, kFramesPerStep, S, S});
  float* out = video.data().data();
  for (std::size_t t = 0; t < T; ++t) {
    const bool moving = has_motion(seq.kinds[t]);
    for (std::size_t f = 0; f < kFramesPerStep; ++f) {
      const double time = (static_cast<double>(t * kFramesPerStep + f) + 0.5) / kVideoFps;
      const double opening = moving ? envelope(who, time) : who.mouth_rest;
      const double mouth_level = who.face_level * (1.0 - 0.8 * opening);
      for (std::size_t p = 0; p < S * S; ++p) {
        const double base = is_mouth[p] ? mouth_level : face[p];
        *out++ = static_cast<float>(base + 0.03 * pixels.normal());
      }
    }
  }
  return video;
}

std::vector<io::ManifestRecord> write_synthetic(const SynthConfig& cfg, const std::filesystem::path& dir) {
  const auto plan = plan_synthetic(cfg);
  std::vector<io::ManifestRecord> records;
  records.reserve(plan.size());
  for (const auto& seq : plan) {
    io::ManifestRecord r;
    r.id = seq.id;
    r.video_path = "videos/" + seq.id + ".avtb";
    r.audio_path = "audio/" + seq.id + ".wav";
    r.labels = seq.labels;
    r.split = seq.split;
    io::save_blob(dir / r.video_path, render_video(cfg, seq));
    const auto wave = render_audio(cfg, seq);
    io::write_wav(dir / r.audio_path, wave, cfg.sample_rate_hz);
    records.push_back(std::move(r));
  }
  io::write_manifest(dir / "manifest.jsonl", records);
  return records;
}

}  // namespace avasd::data
