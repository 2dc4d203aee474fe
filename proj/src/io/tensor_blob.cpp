#include "avasd/io/tensor_blob.hpp"

#include <limits>

#include "avasd/core/error.hpp"

namespace avasd::io {

template <typename T>
void append_blob(ByteWriter& out, const Tensor<T>& tensor) {
  if (tensor.empty()) throw ArgumentError("cannot serialize an empty tensor");
  if (tensor.rank() > kMaxBlobRank) {
    throw ArgumentError("tensor rank " + std::to_string(tensor.rank()) + " exceeds blob limit");
  }
  out.text("AVTB");
  out.u16(kBlobVersion);
  out.u8(static_cast<std::uint8_t>(dtype_of<T>()));
  out.u8(static_cast<std::uint8_t>(tensor.rank()));
  for (std::size_t d : tensor.shape()) out.u64(d);
  out.buffer().reserve(out.buffer().size() + tensor.size() * sizeof(T));
  for (T v : tensor.data()) {
    if constexpr (std::is_same_v<T, float>) out.f32(v);
    else out.f64(v);
  }
}

template <typename T>
Tensor<T> read_blob_from(ByteReader& in) {
  in.expect("AVTB");
  const std::uint16_t version = in.u16();
  if (version != kBlobVersion) in.fail("unsupported blob version " + std::to_string(version));
  const std::uint8_t code = in.u8();
  if (code != static_cast<std::uint8_t>(DType::kF32) && code != static_cast<std::uint8_t>(DType::kF64)) {
    in.fail("unknown dtype code " + std::to_string(code));
  }
  const std::size_t width = code == static_cast<std::uint8_t>(DType::kF32) ? 4 : 8;
  const std::uint8_t rank = in.u8();
  if (rank == 0 || rank > kMaxBlobRank) in.fail("invalid rank " + std::to_string(rank));
  Shape shape(rank);
  std::uint64_t count = 1;
  for (auto& d : shape) {
    const std::uint64_t e = in.u64();
    if (e == 0) in.fail("zero extent");
    if (count > std::numeric_limits<std::uint64_t>::max() / e) in.fail("extent product overflows");
    count *= e;
    d = static_cast<std::size_t>(e);
  }
  if (count > in.remaining() / width) {
    in.fail("payload needs " + std::to_string(count) + " elements of " + std::to_string(width) +
            " bytes but only " + std::to_string(in.remaining()) + " bytes remain");
  }
  std::vector<T> values(static_cast<std::size_t>(count));
  if (width == 4) {
    for (T& v : values) v = static_cast<T>(in.f32());
  } else {
    for (T& v : values) v = static_cast<T>(in.f64());
  }
  return Tensor<T>(std::move(shape), std::move(values));
}

template <typename T>
std::vector<std::uint8_t> encode_blob(const Tensor<T>& tensor) {
  ByteWriter out;
  append_blob(out, tensor);
  return out.take();
}

template <typename T>
Tensor<T> decode_blob(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "tensor blob");
  Tensor<T> t = read_blob_from<T>(in);
  if (in.remaining() != 0) {
    in.fail(std::to_string(in.remaining()) + " trailing bytes after payload");
  }
  return t;
}

template <typename T>
void save_blob(const std::filesystem::path& path, const Tensor<T>& tensor) {
  write_file(path, encode_blob(tensor));
}

template <typename T>
Tensor<T> load_blob(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader in(bytes, path.string());
  Tensor<T> t = read_blob_from<T>(in);
  if (in.remaining() != 0) in.fail("trailing bytes after payload");
  return t;
}

#define AVASD_INSTANTIATE(T)                                                   \
  template void append_blob(ByteWriter&, const Tensor<T>&);                    \
  template Tensor<T> read_blob_from<T>(ByteReader&);                           \
  template std::vector<std::uint8_t> encode_blob(const Tensor<T>&);            \
  template Tensor<T> decode_blob<T>(std::span<const std::uint8_t>);            \
  template void save_blob(const std::filesystem::path&, const Tensor<T>&);     \
  template Tensor<T> load_blob<T>(const std::filesystem::path&);

AVASD_INSTANTIATE(float)
AVASD_INSTANTIATE(double)
#undef AVASD_INSTANTIATE

}  // namespace avasd::io
