#include "avasd/io/checkpoint.hpp"

#include <set>

#include "avasd/core/error.hpp"
#include "avasd/io/bytes.hpp"
#include "avasd/io/tensor_blob.hpp"

namespace avasd::io {

namespace {
constexpr std::size_t kMaxNameLength = 4096;
}

const CheckpointEntry* Checkpoint::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter out;
  out.text("AVCK");
  out.u16(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(ckpt.config_json.size()));
  out.text(ckpt.config_json);
  out.u32(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    if (e.name.empty() || e.name.size() > kMaxNameLength) {
      throw ArgumentError("checkpoint entry name must have 1.." + std::to_string(kMaxNameLength) +
                          " bytes");
    }
    out.u32(static_cast<std::uint32_t>(e.name.size()));
    out.text(e.name);
    append_blob(out, e.value);
  }
  out.u32(crc32(out.buffer()));
  return out.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "checkpoint");
  in.expect("AVCK");
  const std::uint16_t version = in.u16();
  if (version != kCheckpointVersion) {
    in.fail("unsupported checkpoint version " + std::to_string(version) + " (expected " +
            std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < 10) in.fail("too short to hold a CRC");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.subspan(bytes.size() - 4), "checkpoint");
  const std::uint32_t stored = tail.u32();
  const std::uint32_t actual = crc32(body);
  if (stored != actual) {
    throw FormatError("checkpoint CRC mismatch: stored " + std::to_string(stored) + ", computed " +
                      std::to_string(actual));
  }

  ByteReader r(body, "checkpoint");
  (void)r.bytes(6);
  Checkpoint ckpt;
  const std::uint32_t config_len = r.u32();
  if (config_len > r.remaining()) r.fail("config length exceeds file");
  ckpt.config_json = r.text(config_len);
  const std::uint32_t count = r.u32();
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    if (name_len == 0 || name_len > kMaxNameLength || name_len > r.remaining()) {
      r.fail("invalid entry name length " + std::to_string(name_len));
    }
    CheckpointEntry e;
    e.name = r.text(name_len);
    if (!seen.insert(e.name).second) r.fail("duplicate entry \"" + e.name + "\"");
    e.value = read_blob_from<double>(r);
    ckpt.entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) r.fail(std::to_string(r.remaining()) + " unexpected bytes before CRC");
  return ckpt;
}

void save_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace avasd::io
