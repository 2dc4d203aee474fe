#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "avasd/core/tensor.hpp"
#include "avasd/io/bytes.hpp"

namespace avasd::io {

// Layout (little-endian):
//   "AVTB" | u16 version=1 | u8 dtype (1=f32, 2=f64) | u8 rank |
//   rank x u64 extents | payload, row-major
enum class DType : std::uint8_t { kF32 = 1, kF64 = 2 };

constexpr std::uint16_t kBlobVersion = 1;
constexpr std::size_t kMaxBlobRank = 8;

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::kF32; }
template <>
constexpr DType dtype_of<double>() { return DType::kF64; }

template <typename T>
void append_blob(ByteWriter& out, const Tensor<T>& tensor);

/// Reads one blob at the reader's cursor, converting to T if the stored
/// dtype differs. The cursor ends just past the payload.
template <typename T>
Tensor<T> read_blob_from(ByteReader& in);

template <typename T>
std::vector<std::uint8_t> encode_blob(const Tensor<T>& tensor);

/// Whole-buffer decode: trailing bytes after the payload are an error.
template <typename T>
Tensor<T> decode_blob(std::span<const std::uint8_t> bytes);

template <typename T>
void save_blob(const std::filesystem::path& path, const Tensor<T>& tensor);

template <typename T>
Tensor<T> load_blob(const std::filesystem::path& path);

}  // namespace avasd::io
