#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace avasd::io {

enum class Split { kTrain, kVal };

const char* to_string(Split split) noexcept;
Split parse_split(std::string_view text);

/// One line of manifest.jsonl. Paths are relative to the manifest's
/// directory.
struct ManifestRecord {
  std::string id;
  std::string video_path;
  std::string audio_path;
  std::vector<int> labels;  // one 0/1 label per step
  Split split = Split::kTrain;

  bool operator==(const ManifestRecord&) const = default;
};

std::string to_json_line(const ManifestRecord& record);

/// Throws FormatError on malformed JSON, missing fields or labels outside {0,1}.
ManifestRecord parse_manifest_line(std::string_view line);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

/// Blank lines are ignored; errors carry the 1-based line number.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

}  // namespace avasd::io
