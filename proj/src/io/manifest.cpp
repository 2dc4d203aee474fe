#include "avasd/io/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "avasd/core/error.hpp"
#include "avasd/io/bytes.hpp"

namespace avasd::io {

using nlohmann::json;

const char* to_string(Split split) noexcept { return split == Split::kTrain ? "train" : "val"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  throw FormatError("unknown split \"" + std::string(text) + "\" (expected train or val)");
}

std::string to_json_line(const ManifestRecord& record) {
  json j;
  j["id"] = record.id;
  j["video_path"] = record.video_path;
  j["audio_path"] = record.audio_path;
  j["labels"] = record.labels;
  j["split"] = to_string(record.split);
  return j.dump();
}

ManifestRecord parse_manifest_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest line is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("manifest line must be a JSON object");
  auto field = [&](const char* key, auto check, const char* type) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(std::string("manifest record missing \"") + key + "\"");
    if (!check(*it)) throw FormatError(std::string("manifest field \"") + key + "\" must be " + type);
    return *it;
  };
  auto is_string = [](const json& v) { return v.is_string(); };
  ManifestRecord r;
  r.id = field("id", is_string, "a string").get<std::string>();
  r.video_path = field("video_path", is_string, "a string").get<std::string>();
  r.audio_path = field("audio_path", is_string, "a string").get<std::string>();
  r.split = parse_split(field("split", is_string, "a string").get<std::string>());
  const json& labels = field("labels", [](const json& v) { return v.is_array(); }, "an array");
  if (labels.empty()) throw FormatError("manifest record \"" + r.id + "\" has no labels");
  for (const json& l : labels) {
    if (!l.is_number_integer() || (l.get<long>() != 0 && l.get<long>() != 1)) {
      throw FormatError("manifest record \"" + r.id + "\" has a label outside {0,1}");
    }
    r.labels.push_back(l.get<int>());
  }
  if (r.id.empty()) throw FormatError("manifest record has an empty id");
  return r;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  std::string text;
  for (const auto& r : records) {
    text += to_json_line(r);
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestRecord> records;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_manifest_line(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace avasd::io
