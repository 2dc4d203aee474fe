#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "avasd/core/error.hpp"
#include "avasd/core/prng.hpp"
#include "avasd/data/dataset.hpp"
#include "avasd/data/synthetic.hpp"
#include "avasd/io/bytes.hpp"
#include "avasd/io/checkpoint.hpp"
#include "avasd/io/manifest.hpp"
#include "avasd/io/tensor_blob.hpp"
#include "avasd/io/wav.hpp"
#include "support/fuzz.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace avasd;
using namespace avasd::io;
using Bytes = std::vector<std::uint8_t>;

namespace {

void put(Bytes& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }
void put16(Bytes& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}
void put32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

// Hand-assembled RIFF file; `extra` chunks go between fmt and data.
Bytes make_wav(const std::vector<std::int16_t>& samples, std::uint16_t channels = 1,
               const Bytes& extra = {}) {
  Bytes body;
  put(body, "WAVE");
  put(body, "fmt ");
  put32(body, 16);
  put16(body, 1);
  put16(body, channels);
  put32(body, 16000);
  put32(body, 16000 * 2 * channels);
  put16(body, 2 * channels);
  put16(body, 16);
  body.insert(body.end(), extra.begin(), extra.end());
  put(body, "data");
  put32(body, static_cast<std::uint32_t>(samples.size() * 2));
  for (auto s : samples) put16(body, static_cast<std::uint16_t>(s));
  Bytes out;
  put(out, "RIFF");
  put32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Checkpoint sample_checkpoint(std::uint64_t seed) {
  Prng prng(seed);
  Checkpoint c;
  c.config_json = R"({"variant":"m1"})";
  c.entries.push_back({"visual.conv1.kernel", oracle::random_tensor({3, 2, 2}, prng)});
  c.entries.push_back({"head.bias", oracle::random_tensor({2}, prng)});
  return c;
}

}  // namespace

TEST_CASE("minimal PCM16 file scales samples by 1/32768") {
  const Bytes wav = make_wav({0, 16384, -32768});
  CHECK(wav.size() == 44 + 6);
  const WavAudio a = parse_wav(wav);
  CHECK(a.sample_rate_hz == 16000);
  REQUIRE(a.samples.size() == 3);
  CHECK(a.samples[0] == 0.0);
  CHECK(a.samples[1] == 0.5);
  CHECK(a.samples[2] == -1.0);
}

TEST_CASE("stereo is rejected with the channel count") {
  try {
    (void)parse_wav(make_wav({1, 2, 3, 4}, 2));
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("2 channels") != std::string::npos);
  }
}

TEST_CASE("unknown chunks are walked over, including odd-sized ones") {
  Bytes list;
  put(list, "LIST");
  put32(list, 5);
  for (char c : std::string("INFOx")) list.push_back(static_cast<std::uint8_t>(c));
  list.push_back(0);  // pad byte
  const WavAudio a = parse_wav(make_wav({100, -100, 7}, 1, list));
  REQUIRE(a.samples.size() == 3);
  CHECK(a.samples[0] == 100 / 32768.0);
  CHECK(a.samples[2] == 7 / 32768.0);

  Bytes no_pad = list;
  no_pad.pop_back();
  CHECK_THROWS_AS(parse_wav(make_wav({1}, 1, no_pad)), FormatError);
}

TEST_CASE("malformed WAV headers raise format errors") {
  const Bytes good = make_wav({1, 2, 3});
  Bytes truncated(good.begin(), good.end() - 2);
  CHECK_THROWS_AS(parse_wav(truncated), FormatError);

  Bytes not_pcm = good;
  not_pcm[20] = 3;  // IEEE float tag
  CHECK_THROWS_AS(parse_wav(not_pcm), FormatError);

  Bytes eight_bit = good;
  eight_bit[34] = 8;
  CHECK_THROWS_AS(parse_wav(eight_bit), FormatError);

  Bytes no_data(good.begin(), good.begin() + 36);
  no_data[4] = 28;
  no_data[5] = no_data[6] = no_data[7] = 0;
  CHECK_THROWS_AS(parse_wav(no_data), FormatError);
  CHECK_THROWS_AS(parse_wav(Bytes{}), FormatError);
}

TEST_CASE("WAV encode/parse round trip within one PCM step") {
  Prng prng(2);
  std::vector<double> x(1000);
  for (double& v : x) v = prng.uniform(-1.0, 1.0);
  x[0] = 1.5;  // clipped
  const WavAudio a = parse_wav(encode_wav(x, 16000));
  REQUIRE(a.samples.size() == x.size());
  CHECK(a.samples[0] == doctest::Approx(32767 / 32768.0));
  for (std::size_t i = 1; i < x.size(); ++i) CHECK(std::abs(a.samples[i] - x[i]) <= 0.5 / 32768.0 + 1e-15);
}

TEST_CASE("tensor blobs round trip and convert between widths") {
  Prng prng(4);
  const Tensor<double> t = oracle::random_tensor({2, 3, 4}, prng);
  const Bytes b = encode_blob(t);
  CHECK(b.size() == 8 + 3 * 8 + 24 * 8);
  CHECK(std::memcmp(b.data(), "AVTB", 4) == 0);
  CHECK(b[6] == 2);
  CHECK(b[7] == 3);
  CHECK(decode_blob<double>(b) == t);

  const Tensor<float> f = t.cast<float>();
  const Tensor<double> widened = decode_blob<double>(encode_blob(f));
  CHECK(widened == f.cast<double>());
}

TEST_CASE("tensor blob rejects inconsistent headers") {
  const Bytes good = encode_blob(Tensor<float>({2, 2}, 1.0f));
  Bytes longer = good;
  longer.push_back(0);
  CHECK_THROWS_AS(decode_blob<float>(longer), FormatError);
  Bytes shorter(good.begin(), good.end() - 1);
  CHECK_THROWS_AS(decode_blob<float>(shorter), FormatError);
  Bytes zero_rank = good;
  zero_rank[7] = 0;
  CHECK_THROWS_AS(decode_blob<float>(zero_rank), FormatError);
  Bytes bad_dtype = good;
  bad_dtype[6] = 9;
  CHECK_THROWS_AS(decode_blob<float>(bad_dtype), FormatError);

  // two extents whose product wraps to 16 elements
  ByteWriter w;
  w.text("AVTB");
  w.u16(1);
  w.u8(1);
  w.u8(2);
  w.u64(std::uint64_t{1} << 62);
  w.u64(std::uint64_t{1} << 6);
  for (int i = 0; i < 16; ++i) w.f32(0.f);
  CHECK_THROWS_AS(decode_blob<float>(w.take()), FormatError);
}

TEST_CASE("checkpoint round trip is bit exact and CRC-protected") {
  const Checkpoint c = sample_checkpoint(9);
  const Bytes bytes = encode_checkpoint(c);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back.config_json == c.config_json);
  REQUIRE(back.entries.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.entries[i].name == c.entries[i].name);
    CHECK(std::memcmp(back.entries[i].value.data().data(), c.entries[i].value.data().data(),
                      c.entries[i].value.size() * sizeof(double)) == 0);
  }
  CHECK(back.find("head.bias") != nullptr);
  CHECK(back.find("nope") == nullptr);

  Bytes flipped = bytes;
  flipped[bytes.size() - 12] ^= 0x01;  // inside the last payload
  try {
    (void)decode_checkpoint(flipped);
    FAIL("expected CRC failure");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("CRC") != std::string::npos);
  }

  Bytes version = bytes;
  version[4] = 7;
  try {
    (void)decode_checkpoint(version);
    FAIL("expected version failure");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  Checkpoint dup = c;
  dup.entries.push_back(dup.entries[0]);
  CHECK_THROWS_AS(decode_checkpoint(encode_checkpoint(dup)), FormatError);
}

TEST_CASE("checkpoint files on disk") {
  testing::TempDir dir;
  const Checkpoint c = sample_checkpoint(10);
  save_checkpoint_file(dir.path() / "a.ckpt", c);
  CHECK(encode_checkpoint(load_checkpoint_file(dir.path() / "a.ckpt")) == encode_checkpoint(c));
  CHECK_THROWS_AS(load_checkpoint_file(dir.path() / "missing.ckpt"), IoError);
}

TEST_CASE("single-byte header mutations never slip through") {
  const auto wav = make_wav([] {
    std::vector<std::int16_t> s(64);
    Prng p(1);
    for (auto& v : s) v = static_cast<std::int16_t>(p.below(65536) - 32768);
    return s;
  }());
  const auto blob = encode_blob(Tensor<float>({3, 5, 7}, 0.25f));
  const auto ckpt = encode_checkpoint(sample_checkpoint(3));

  const auto w = testing::fuzz_header(wav, 44, 1000, 101, [](const Bytes& b) { (void)parse_wav(b); });
  const auto t = testing::fuzz_header(blob, 8 + 3 * 8, 1000, 102,
                                      [](const Bytes& b) { (void)decode_blob<float>(b); });
  const auto k = testing::fuzz_header(ckpt, ckpt.size(), 1000, 103,
                                      [](const Bytes& b) { (void)decode_checkpoint(b); });
  for (const auto* r : {&w, &t, &k}) {
    CHECK(r->mutations == 1000);
    CHECK(r->structured_errors == 1000);
    CHECK(r->accepted == 0);
    CHECK(r->other_exceptions == 0);
  }
}

TEST_CASE("manifest lines round trip and report the failing line") {
  ManifestRecord r{"seq000001", "videos/seq000001.avtb", "audio/seq000001.wav", {0, 1, 1}, Split::kVal};
  CHECK(parse_manifest_line(to_json_line(r)) == r);
  CHECK_THROWS_AS(parse_manifest_line("{"), FormatError);
  CHECK_THROWS_AS(parse_manifest_line(R"({"id":"a","video_path":"v","audio_path":"a","labels":[2],"split":"train"})"),
                  FormatError);
  CHECK_THROWS_AS(parse_manifest_line(R"({"id":"a","video_path":"v","audio_path":"a","labels":[1],"split":"test"})"),
                  FormatError);
  CHECK_THROWS_AS(parse_manifest_line(R"({"id":"a","audio_path":"a","labels":[1],"split":"train"})"),
                  FormatError);

  testing::TempDir dir;
  write_manifest(dir.path() / "m.jsonl", {r, r});
  CHECK(read_manifest(dir.path() / "m.jsonl").size() == 2);
  {
    std::ofstream out(dir.path() / "bad.jsonl");
    out << to_json_line(r) << "\n\n" << "[1,2]\n";
  }
  try {
    (void)read_manifest(dir.path() / "bad.jsonl");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("synthetic plan has exact class proportions") {
  data::SynthConfig cfg;
  cfg.n_sequences = 500;
  cfg.seq_len = 10;
  cfg.confuser_fraction = 0.5;
  const auto plan = data::plan_synthetic(cfg);
  std::map<data::StepKind, int> counts;
  int positives = 0, val = 0;
  for (const auto& s : plan) {
    CHECK(s.labels.size() == 10);
    for (std::size_t t = 0; t < 10; ++t) {
      ++counts[s.kinds[t]];
      positives += s.labels[t];
      CHECK(s.labels[t] == data::label_of(s.kinds[t]));
    }
    val += s.split == Split::kVal;
  }
  CHECK(std::abs(positives / 5000.0 - 0.5) <= 0.02);
  CHECK(counts[data::StepKind::kVoiceOver] == 1250);
  CHECK(counts[data::StepKind::kMouthing] == 1250);
  CHECK(counts[data::StepKind::kSilent] == 0);
  CHECK(val == 100);

  cfg.confuser_fraction = 0.0;
  for (const auto& s : data::plan_synthetic(cfg))
    for (auto k : s.kinds) CHECK((k == data::StepKind::kSpeaking || k == data::StepKind::kSilent));

  cfg.confuser_fraction = 0.8;
  int pos = 0;
  for (const auto& s : data::plan_synthetic(cfg))
    for (int l : s.labels) pos += l;
  CHECK(pos == 1000);

  cfg.confuser_fraction = 1.5;
  CHECK_THROWS_AS(data::plan_synthetic(cfg), ArgumentError);
}

TEST_CASE("single-modality ceiling at half confusers") {
  // Enumerate the step kinds: a score that sees only one modality is the
  // presence of that modality's cue; the fused score sees both.
  data::SynthConfig cfg;
  cfg.n_sequences = 400;
  cfg.confuser_fraction = 0.5;
  std::vector<double> audio_score, video_score, fused_score;
  std::vector<int> labels;
  for (const auto& s : data::plan_synthetic(cfg))
    for (std::size_t t = 0; t < s.kinds.size(); ++t) {
      audio_score.push_back(data::has_speech(s.kinds[t]));
      video_score.push_back(data::has_motion(s.kinds[t]));
      fused_score.push_back(data::has_speech(s.kinds[t]) && data::has_motion(s.kinds[t]));
      labels.push_back(s.labels[t]);
    }
  CHECK(oracle::pairwise_auc(audio_score, labels) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(oracle::pairwise_auc(video_score, labels) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(oracle::pairwise_auc(fused_score, labels) == 1.0);
}

TEST_CASE("rendered cues follow the step kinds") {
  data::SynthConfig cfg;
  cfg.n_sequences = 20;
  cfg.seq_len = 6;
  cfg.image_size = 24;
  for (const auto& s : data::plan_synthetic(cfg)) {
    const auto wave = data::render_audio(cfg, s);
    REQUIRE(wave.size() == 6 * 8000);
    const Tensor<float> video = data::render_video(cfg, s);
    REQUIRE(video.shape() == Shape{6, 5, 24, 24});
    for (std::size_t t = 0; t < 6; ++t) {
      double power = 0.0;
      for (std::size_t i = 0; i < 8000; ++i) power += wave[t * 8000 + i] * wave[t * 8000 + i];
      const double rms = std::sqrt(power / 8000);
      if (data::has_speech(s.kinds[t])) CHECK(rms > 0.03);
      else CHECK(rms < 0.02);

      // frame-to-frame spread of mean brightness
      double lo = 1e9, hi = -1e9;
      for (std::size_t f = 0; f < 5; ++f) {
        double m = 0.0;
        for (std::size_t p = 0; p < 576; ++p) m += video.data()[((t * 5 + f) * 576) + p];
        lo = std::min(lo, m / 576), hi = std::max(hi, m / 576);
      }
      if (!data::has_motion(s.kinds[t])) CHECK(hi - lo < 0.005);
    }
  }
}

TEST_CASE("same seed gives bit-identical data, other seeds differ") {
  data::SynthConfig cfg;
  cfg.n_sequences = 6;
  cfg.seq_len = 3;
  cfg.image_size = 16;
  const auto a = data::plan_synthetic(cfg);
  const auto b = data::plan_synthetic(cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].labels == b[i].labels);
    CHECK(data::render_audio(cfg, a[i]) == data::render_audio(cfg, b[i]));
    CHECK(data::render_video(cfg, a[i]) == data::render_video(cfg, b[i]));
  }
  data::SynthConfig other = cfg;
  other.seed = 2;
  CHECK(data::render_audio(other, a[0]) != data::render_audio(cfg, a[0]));

  testing::TempDir d1, d2;
  data::write_synthetic(cfg, d1.path());
  data::write_synthetic(cfg, d2.path());
  for (const auto& entry : std::filesystem::recursive_directory_iterator(d1.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), d1.path());
    CHECK(read_file(entry.path()) == read_file(d2.path() / rel));
  }
}

TEST_CASE("dataset directory loads back with matching features") {
  data::SynthConfig cfg;
  cfg.n_sequences = 5;
  cfg.seq_len = 3;
  cfg.image_size = 16;
  cfg.val_fraction = 0.4;
  testing::TempDir dir;
  data::write_synthetic(cfg, dir.path());
  const dsp::MfccExtractor ex;
  data::AvDataset disk = data::load_dataset(dir.path(), ex);
  data::AvDataset mem = data::synthesize_dataset(cfg, ex);
  REQUIRE(disk.train.size() == 3);
  REQUIRE(disk.val.size() == 2);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(disk.train[i].labels == mem.train[i].labels);
    CHECK(disk.train[i].video == mem.train[i].video);
    CHECK(disk.train[i].audio.shape() == Shape{3, 13, 20});
    CHECK(disk.train[i].waveform().size() == 24000);
    // PCM16 quantization perturbs the log-mel values only slightly
    double worst = 0.0;
    for (std::size_t j = 0; j < disk.train[i].audio.size(); ++j)
      worst = std::max<double>(worst, std::abs(disk.train[i].audio[j] - mem.train[i].audio[j]));
    CHECK(worst < 0.5);
  }

  const data::FeatureStats stats = data::normalize_dataset(mem.train, mem.val);
  std::vector<Tensor<float>> v;
  for (auto& s : mem.train) v.push_back(s.video);
  const auto after = dsp::compute_norm_stats<float>(v);
  CHECK(std::abs(after.mean) < 1e-4);
  CHECK(after.var == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(stats.audio.var > 0.0);

  std::filesystem::remove(dir.path() / "audio" / "seq000001.wav");
  CHECK_THROWS_AS(data::load_dataset(dir.path(), ex), IoError);
}
