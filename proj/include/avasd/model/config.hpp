#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace avasd {

/// Audio front ends: raw MFCC (M1), two fully connected layers (M2), or a
/// small convolutional stack (M3).
enum class Variant { kM1, kM2, kM3 };

const char* to_string(Variant v) noexcept;
Variant parse_variant(std::string_view text);

/// One conv block: conv -> batch norm -> ReLU -> optional max pool.
struct ConvBlock {
  std::size_t channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t pool_window = 0;  // 0 = no pooling
  std::size_t pool_stride = 0;

  bool operator==(const ConvBlock&) const = default;
};

struct ModelConfig {
  Variant variant = Variant::kM1;
  std::size_t stream_bigru_layers = 2;
  std::size_t stream_hidden = 256;  // per direction
  std::size_t fusion_hidden = 512;  // per direction
  std::size_t seq_len = 10;
  double dropout_rate = 0.5;
  double alpha_a = 0.4;
  double alpha_v = 0.4;
  double l2_alpha = 1e-4;

  // visual stream: the first block is a 3D conv spanning all frames
  std::size_t frames_per_step = 5;
  std::size_t image_size = 100;
  std::vector<ConvBlock> visual_blocks;
  std::size_t visual_embedding = 512;

  // audio stream
  std::size_t mfcc_coeffs = 13;
  std::size_t mfcc_frames = 20;
  std::vector<std::size_t> fc_widths;     // M2
  std::vector<ConvBlock> audio_blocks;    // M3
  std::size_t audio_embedding = 512;      // M3 dense width

  bool operator==(const ModelConfig&) const = default;

  /// Layer table at full size (100x100 faces, 256/512-unit GRUs).
  static ModelConfig paper(Variant v);
  /// Reduced widths and 24x24 faces, trainable on one CPU core in minutes.
  static ModelConfig desk(Variant v);
  /// Smallest model touching every layer type, for gradient checks.
  static ModelConfig tiny(Variant v);
  static ModelConfig profile(std::string_view name, Variant v);

  /// [H, W, C] after every visual block; throws ArgumentError if a stage
  /// collapses to nothing.
  std::vector<std::size_t> visual_feature_shape() const;
  std::vector<std::size_t> audio_feature_shape() const;
  /// Per-step width entering the audio BiGRU stack.
  std::size_t audio_stream_width() const;

  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);
};

}  // namespace avasd
