#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace avasd::io {

struct WavAudio {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate_hz = 0;
};

/// Mono 16-bit PCM RIFF/WAVE. Chunks other than "fmt " and "data" are
/// skipped (honouring the odd-size pad byte). Each sample s maps to s/32768.
/// Any other layout, or a header that disagrees with the byte count,
/// raises FormatError.
WavAudio parse_wav(std::span<const std::uint8_t> bytes);
WavAudio read_wav(const std::filesystem::path& path);

/// Samples are clamped to [-1, 1] and rounded to the nearest PCM16 step.
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate_hz);
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate_hz);

}  // namespace avasd::io
