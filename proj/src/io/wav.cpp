#include "avasd/io/wav.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "avasd/core/error.hpp"
#include "avasd/io/bytes.hpp"

namespace avasd::io {

namespace {

constexpr std::uint16_t kFormatPcm = 1;

struct Format {
  std::uint16_t channels;
  std::uint32_t sample_rate;
  std::uint16_t bits;
};

Format read_fmt(ByteReader& in, std::uint32_t size) {
  if (size < 16) in.fail("fmt chunk of " + std::to_string(size) + " bytes is shorter than 16");
  const std::size_t start = in.offset();
  const std::uint16_t tag = in.u16();
  const std::uint16_t channels = in.u16();
  const std::uint32_t rate = in.u32();
  const std::uint32_t byte_rate = in.u32();
  const std::uint16_t block_align = in.u16();
  const std::uint16_t bits = in.u16();
  if (tag != kFormatPcm) in.fail("format tag " + std::to_string(tag) + " is not integer PCM (1)");
  if (channels != 1) {
    in.fail("expected mono audio, file has " + std::to_string(channels) + " channels");
  }
  if (bits != 16) in.fail("expected 16 bits per sample, got " + std::to_string(bits));
  if (rate == 0) in.fail("sample rate is zero");
  if (block_align != 2) in.fail("block align " + std::to_string(block_align) + " != 2");
  if (byte_rate != rate * 2u) {
    in.fail("byte rate " + std::to_string(byte_rate) + " != sample rate x block align");
  }
  (void)in.bytes(size - (in.offset() - start));
  return {channels, rate, bits};
}

}  // namespace

WavAudio parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "wav");
  in.expect("RIFF");
  const std::uint32_t riff_size = in.u32();
  if (static_cast<std::uint64_t>(riff_size) + 8 != bytes.size()) {
    in.fail("RIFF size " + std::to_string(riff_size) + " disagrees with file length " +
            std::to_string(bytes.size()));
  }
  in.expect("WAVE");

  std::optional<Format> fmt;
  std::optional<WavAudio> audio;
  while (in.remaining() > 0) {
    const std::string id = in.text(4);
    const std::uint32_t size = in.u32();
    if (size > in.remaining()) {
      in.fail("chunk \"" + id + "\" claims " + std::to_string(size) + " bytes but only " +
              std::to_string(in.remaining()) + " remain");
    }
    if (id == "fmt ") {
      if (fmt) in.fail("duplicate fmt chunk");
      fmt = read_fmt(in, size);
    } else if (id == "data") {
      if (!fmt) in.fail("data chunk before fmt chunk");
      if (audio) in.fail("duplicate data chunk");
      if (size % 2 != 0) in.fail("data size " + std::to_string(size) + " is not a whole number of samples");
      WavAudio a;
      a.sample_rate_hz = static_cast<int>(fmt->sample_rate);
      a.samples.resize(size / 2);
      for (double& s : a.samples) s = static_cast<std::int16_t>(in.u16()) / 32768.0;
      audio = std::move(a);
    } else {
      (void)in.bytes(size);
    }
    if (size % 2 != 0) {
      if (in.remaining() == 0) in.fail("missing pad byte after odd-sized chunk \"" + id + "\"");
      (void)in.u8();
    }
  }
  if (!fmt) in.fail("no fmt chunk");
  if (!audio) in.fail("no data chunk");
  if (fmt->sample_rate > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    in.fail("sample rate out of range");
  }
  return std::move(*audio);
}

WavAudio read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate_hz) {
  if (sample_rate_hz <= 0) throw ArgumentError("sample rate must be positive");
  const std::uint64_t data_bytes = samples.size() * 2;
  if (data_bytes + 36 > std::numeric_limits<std::uint32_t>::max()) {
    throw ArgumentError("audio too long for a RIFF file");
  }
  ByteWriter out;
  out.buffer().reserve(44 + data_bytes);
  out.text("RIFF");
  out.u32(static_cast<std::uint32_t>(36 + data_bytes));
  out.text("WAVE");
  out.text("fmt ");
  out.u32(16);
  out.u16(kFormatPcm);
  out.u16(1);
  out.u32(static_cast<std::uint32_t>(sample_rate_hz));
  out.u32(static_cast<std::uint32_t>(sample_rate_hz) * 2);
  out.u16(2);
  out.u16(16);
  out.text("data");
  out.u32(static_cast<std::uint32_t>(data_bytes));
  for (double s : samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    out.u16(static_cast<std::uint16_t>(v));
  }
  return out.take();
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate_hz) {
  write_file(path, encode_wav(samples, sample_rate_hz));
}

}  // namespace avasd::io
