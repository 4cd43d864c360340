#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slrobust/core/error.hpp"

namespace slrobust::benchgen {

namespace fs = std::filesystem;
using nlohmann::json;

/// One row of the input sign-video manifest.
struct CslrEntry {
  std::string video_id;
  fs::path frames_dir;
  fs::path mask_dir;  // empty when no masks exist (training-side data)
  std::vector<std::string> glosses;
};

/// One row of a generated split manifest.
struct SampleRecord {
  std::string video_id;
  fs::path frames_dir;
  fs::path mask_dir;
  std::vector<std::string> glosses;
  std::string scene_class;
  std::string scene_image_id;
  int split_id = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

inline void to_json(json& j, const SampleRecord& r) {
  j = json{{"video_id", r.video_id},
           {"frames_dir", r.frames_dir.generic_string()},
           {"mask_dir", r.mask_dir.generic_string()},
           {"glosses", r.glosses},
           {"scene_class", r.scene_class},
           {"scene_image_id", r.scene_image_id},
           {"split_id", r.split_id},
           {"seed", r.seed}};
}

inline void from_json(const json& j, SampleRecord& r) {
  r.video_id = j.at("video_id").get<std::string>();
  r.frames_dir = j.at("frames_dir").get<std::string>();
  r.mask_dir = j.value("mask_dir", std::string{});
  r.glosses = j.at("glosses").get<std::vector<std::string>>();
  r.scene_class = j.at("scene_class").get<std::string>();
  r.scene_image_id = j.at("scene_image_id").get<std::string>();
  r.split_id = j.at("split_id").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
}

namespace detail {

// Glosses may be given either as an array or as one space-separated string.
inline std::vector<std::string> read_glosses(const json& j) {
  if (j.is_array()) return j.get<std::vector<std::string>>();
  std::vector<std::string> out;
  std::string s = j.get<std::string>();
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(" \t", pos);
    if (start == std::string::npos) break;
    const auto end = s.find_first_of(" \t", start);
    out.push_back(s.substr(start, end - start));
    pos = end == std::string::npos ? s.size() : end;
  }
  return out;
}

template <typename F>
void for_each_jsonl(const fs::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      f(j);
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace detail

/// Reads the input manifest. Relative paths resolve against the manifest's
/// directory.
inline std::vector<CslrEntry> read_cslr_manifest(const fs::path& path) {
  std::vector<CslrEntry> rows;
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) -> fs::path {
    if (p.empty()) return {};
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  detail::for_each_jsonl(path, [&](const json& j) {
    CslrEntry e;
    e.video_id = j.at("video_id").get<std::string>();
    e.frames_dir = resolve(j.at("frames_dir").get<std::string>());
    e.mask_dir = resolve(j.value("mask_dir", std::string{}));
    e.glosses = detail::read_glosses(j.at("glosses"));
    rows.push_back(std::move(e));
  });
  return rows;
}

inline void write_cslr_manifest(const fs::path& path, const std::vector<CslrEntry>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& e : rows) {
    json j{{"video_id", e.video_id},
           {"frames_dir", e.frames_dir.generic_string()},
           {"mask_dir", e.mask_dir.generic_string()},
           {"glosses", e.glosses}};
    out << j.dump() << '\n';
  }
}

inline std::vector<SampleRecord> read_manifest(const fs::path& path) {
  std::vector<SampleRecord> rows;
  detail::for_each_jsonl(path, [&](const json& j) { rows.push_back(j.get<SampleRecord>()); });
  return rows;
}

/// JSON Lines, one record per line, keys in lexicographic order.
inline void write_manifest(const fs::path& path, const std::vector<SampleRecord>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& r : rows) out << json(r).dump() << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace slrobust::benchgen
