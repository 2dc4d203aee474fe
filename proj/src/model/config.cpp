#include "avasd/model/config.hpp"

#include <json.hpp>

#include "avasd/core/error.hpp"

namespace avasd {

using nlohmann::json;

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::kM1: return "m1";
    case Variant::kM2: return "m2";
    case Variant::kM3: return "m3";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "m1" || text == "M1") return Variant::kM1;
  if (text == "m2" || text == "M2") return Variant::kM2;
  if (text == "m3" || text == "M3") return Variant::kM3;
  throw ArgumentError("unknown variant \"" + std::string(text) + "\" (expected m1, m2 or m3)");
}

ModelConfig ModelConfig::paper(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.visual_blocks = {
      {96, 7, 2, 0, 3, 2},
      {256, 5, 2, 1, 3, 2},
      {512, 3, 1, 1, 0, 0},
      {512, 3, 1, 1, 0, 0},
      {512, 3, 1, 1, 3, 2},
  };
  c.fc_widths = {256, 256};
  c.audio_blocks = {
      {64, 3, 1, 1, 2, 2},
      {128, 3, 1, 1, 2, 2},
      {256, 3, 1, 1, 0, 0},
  };
  return c;
}

ModelConfig ModelConfig::desk(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.stream_hidden = 16;
  c.fusion_hidden = 32;
  c.image_size = 24;
  c.visual_blocks = {
      {8, 7, 2, 0, 3, 2},   // 24 -> 9 -> 4
      {16, 3, 1, 1, 2, 2},  // 4 -> 2
      {16, 3, 1, 1, 0, 0},
  };
  c.visual_embedding = 32;
  c.fc_widths = {32, 32};
  c.audio_blocks = {
      {8, 3, 1, 1, 2, 2},   // 13x20 -> 6x10
      {16, 3, 1, 1, 2, 2},  // -> 3x5
      {16, 3, 1, 1, 0, 0},
  };
  c.audio_embedding = 32;
  return c;
}

ModelConfig ModelConfig::tiny(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.stream_hidden = 4;
  c.fusion_hidden = 4;
  c.seq_len = 2;
  c.frames_per_step = 5;
  c.image_size = 8;
  c.visual_blocks = {
      {3, 3, 1, 0, 2, 2},  // 8 -> 6 -> 3
      {4, 3, 1, 1, 0, 0},
  };
  c.visual_embedding = 5;
  c.mfcc_coeffs = 5;
  c.mfcc_frames = 6;
  c.fc_widths = {6, 5};
  c.audio_blocks = {
      {3, 3, 1, 1, 2, 2},  // 5x6 -> 2x3
      {4, 3, 1, 1, 0, 0},
  };
  c.audio_embedding = 5;
  return c;
}

ModelConfig ModelConfig::profile(std::string_view name, Variant v) {
  if (name == "paper") return paper(v);
  if (name == "desk") return desk(v);
  if (name == "tiny") return tiny(v);
  throw ArgumentError("unknown model profile \"" + std::string(name) + "\" (expected paper, desk or tiny)");
}

namespace {

std::vector<std::size_t> run_blocks(std::size_t h, std::size_t w, std::size_t c,
                                    const std::vector<ConvBlock>& blocks, const char* what) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const ConvBlock& b = blocks[i];
    if (b.channels == 0 || b.kernel == 0 || b.stride == 0) {
      throw ArgumentError(std::string(what) + " block " + std::to_string(i) + " has a zero size");
    }
    if (h + 2 * b.pad < b.kernel || w + 2 * b.pad < b.kernel) {
      throw ArgumentError(std::string(what) + " block " + std::to_string(i) + ": kernel " +
                          std::to_string(b.kernel) + " exceeds the " + std::to_string(h) + "x" +
                          std::to_string(w) + " input");
    }
    h = (h + 2 * b.pad - b.kernel) / b.stride + 1;
    w = (w + 2 * b.pad - b.kernel) / b.stride + 1;
    c = b.channels;
    if (b.pool_window > 0) {
      if (b.pool_stride == 0 || h < b.pool_window || w < b.pool_window) {
        throw ArgumentError(std::string(what) + " block " + std::to_string(i) + ": pooling window " +
                            std::to_string(b.pool_window) + " does not fit " + std::to_string(h) +
                            "x" + std::to_string(w));
      }
      h = (h - b.pool_window) / b.pool_stride + 1;
      w = (w - b.pool_window) / b.pool_stride + 1;
    }
  }
  return {h, w, c};
}

json block_json(const ConvBlock& b) {
  return {{"channels", b.channels}, {"kernel", b.kernel},           {"stride", b.stride},
          {"pad", b.pad},           {"pool_window", b.pool_window}, {"pool_stride", b.pool_stride}};
}

ConvBlock block_from(const json& j) {
  ConvBlock b;
  b.channels = j.at("channels").get<std::size_t>();
  b.kernel = j.at("kernel").get<std::size_t>();
  b.stride = j.at("stride").get<std::size_t>();
  b.pad = j.at("pad").get<std::size_t>();
  b.pool_window = j.at("pool_window").get<std::size_t>();
  b.pool_stride = j.at("pool_stride").get<std::size_t>();
  return b;
}

}  // namespace

std::vector<std::size_t> ModelConfig::visual_feature_shape() const {
  if (visual_blocks.empty()) throw ArgumentError("the visual stream needs at least one conv block");
  return run_blocks(image_size, image_size, 1, visual_blocks, "visual");
}

std::vector<std::size_t> ModelConfig::audio_feature_shape() const {
  if (audio_blocks.empty()) throw ArgumentError("the M3 audio stream needs at least one conv block");
  return run_blocks(mfcc_coeffs, mfcc_frames, 1, audio_blocks, "audio");
}

std::size_t ModelConfig::audio_stream_width() const {
  switch (variant) {
    case Variant::kM1: return mfcc_coeffs * mfcc_frames;
    case Variant::kM2: return fc_widths.back();
    case Variant::kM3: return audio_embedding;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (stream_bigru_layers < 1) throw ArgumentError("need at least one stream BiGRU layer");
  if (stream_hidden == 0 || fusion_hidden == 0 || seq_len == 0) {
    throw ArgumentError("hidden sizes and sequence length must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ArgumentError("dropout rate must lie in [0, 1)");
  if (!(alpha_a >= 0.0 && alpha_v >= 0.0)) throw ArgumentError("auxiliary loss weights must be >= 0");
  if (!(l2_alpha >= 0.0)) throw ArgumentError("l2 alpha must be >= 0");
  if (frames_per_step == 0 || visual_embedding == 0 || mfcc_coeffs == 0 || mfcc_frames == 0) {
    throw ArgumentError("input and embedding sizes must be positive");
  }
  (void)visual_feature_shape();
  if (variant == Variant::kM2) {
    if (fc_widths.empty()) throw ArgumentError("M2 needs at least one fully connected width");
    for (std::size_t w : fc_widths)
      if (w == 0) throw ArgumentError("fully connected widths must be positive");
  }
  if (variant == Variant::kM3) {
    (void)audio_feature_shape();
    if (audio_embedding == 0) throw ArgumentError("audio embedding must be positive");
  }
}

std::string ModelConfig::to_json() const {
  json j;
  j["variant"] = to_string(variant);
  j["stream_bigru_layers"] = stream_bigru_layers;
  j["stream_hidden"] = stream_hidden;
  j["fusion_hidden"] = fusion_hidden;
  j["seq_len"] = seq_len;
  j["dropout_rate"] = dropout_rate;
  j["alpha_a"] = alpha_a;
  j["alpha_v"] = alpha_v;
  j["l2_alpha"] = l2_alpha;
  j["frames_per_step"] = frames_per_step;
  j["image_size"] = image_size;
  j["visual_blocks"] = json::array();
  for (const auto& b : visual_blocks) j["visual_blocks"].push_back(block_json(b));
  j["visual_embedding"] = visual_embedding;
  j["mfcc_coeffs"] = mfcc_coeffs;
  j["mfcc_frames"] = mfcc_frames;
  j["fc_widths"] = fc_widths;
  j["audio_blocks"] = json::array();
  for (const auto& b : audio_blocks) j["audio_blocks"].push_back(block_json(b));
  j["audio_embedding"] = audio_embedding;
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ModelConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.stream_bigru_layers = j.at("stream_bigru_layers").get<std::size_t>();
    c.stream_hidden = j.at("stream_hidden").get<std::size_t>();
    c.fusion_hidden = j.at("fusion_hidden").get<std::size_t>();
    c.seq_len = j.at("seq_len").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.alpha_a = j.at("alpha_a").get<double>();
    c.alpha_v = j.at("alpha_v").get<double>();
    c.l2_alpha = j.at("l2_alpha").get<double>();
    c.frames_per_step = j.at("frames_per_step").get<std::size_t>();
    c.image_size = j.at("image_size").get<std::size_t>();
    for (const auto& b : j.at("visual_blocks")) c.visual_blocks.push_back(block_from(b));
    c.visual_embedding = j.at("visual_embedding").get<std::size_t>();
    c.mfcc_coeffs = j.at("mfcc_coeffs").get<std::size_t>();
    c.mfcc_frames = j.at("mfcc_frames").get<std::size_t>();
    c.fc_widths = j.at("fc_widths").get<std::vector<std::size_t>>();
    for (const auto& b : j.at("audio_blocks")) c.audio_blocks.push_back(block_from(b));
    c.audio_embedding = j.at("audio_embedding").get<std::size_t>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

}  // namespace avasd
