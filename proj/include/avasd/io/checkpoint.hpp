#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avasd/core/tensor.hpp"

namespace avasd::io {

// Layout (little-endian):
//   "AVCK" | u16 version | u32 config length | config JSON |
//   u32 entry count | per entry: u32 name length | name | tensor blob |
//   u32 CRC-32 of every preceding byte
constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  Tensor<double> value;
};

/// Model-agnostic container: the configuration text plus named tensors
/// (parameters and buffers such as running statistics).
struct Checkpoint {
  std::string config_json;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(std::string_view name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);

/// Verifies magic, version and CRC before anything else is trusted;
/// duplicate entry names are rejected.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::filesystem::path& path);

}  // namespace avasd::io
