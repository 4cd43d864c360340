#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "slrobust/benchgen/records.hpp"
#include "slrobust/core/error.hpp"
#include "slrobust/media/image.hpp"
#include "slrobust/media/png_io.hpp"

namespace slrobust::benchgen {

/// A scene image reference. Either `path` names a PNG or `image` holds the
/// pixels already.
struct SceneEntry {
  std::string id;
  std::string class_label;
  fs::path path;
  std::shared_ptr<const media::Frame> image;

  media::Frame load() const {
    if (image) return *image;
    return media::load_frame(path);
  }

  friend bool operator==(const SceneEntry& a, const SceneEntry& b) {
    return a.id == b.id && a.class_label == b.class_label && a.path == b.path;
  }
};

/// Scene images grouped by class; classes iterate in lexicographic order.
struct SceneCatalog {
  std::map<std::string, std::vector<SceneEntry>> classes;

  std::size_t class_count() const noexcept { return classes.size(); }

  std::size_t image_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, v] : classes) n += v.size();
    return n;
  }

  void add(SceneEntry e) {
    if (e.class_label.empty()) throw ValidationError("scene '" + e.id + "' has an empty class label");
    classes[e.class_label].push_back(std::move(e));
  }

  void validate() const {
    if (classes.empty()) throw ValidationError("scene catalog is empty");
    for (const auto& [label, v] : classes)
      if (v.empty()) throw ValidationError("scene class '" + label + "' has no images");
  }

  bool contains_class(const std::string& label) const { return classes.count(label) > 0; }
};

/// Directory tree `<class>/<image>.png`. Image ids are `<class>/<stem>`.
inline SceneCatalog load_catalog_dir(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("scene directory '" + root.string() + "' not found");
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  SceneCatalog cat;
  for (const auto& dir : class_dirs) {
    const std::string label = dir.filename().string();
    for (const auto& p : media::list_frames(dir))
      cat.add({label + "/" + p.stem().string(), label, p, nullptr});
  }
  cat.validate();
  return cat;
}

/// JSON Lines index with fields {id, class, path}; relative paths resolve
/// against the index file's directory.
inline SceneCatalog load_catalog_index(const fs::path& index) {
  SceneCatalog cat;
  const fs::path base = index.parent_path();
  detail::for_each_jsonl(index, [&](const json& j) {
    fs::path p = j.at("path").get<std::string>();
    if (p.is_relative()) p = base / p;
    cat.add({j.at("id").get<std::string>(), j.at("class").get<std::string>(), p, nullptr});
  });
  for (auto& [_, v] : cat.classes)
    std::sort(v.begin(), v.end(), [](const SceneEntry& a, const SceneEntry& b) { return a.id < b.id; });
  cat.validate();
  return cat;
}

inline SceneCatalog load_catalog(const fs::path& where) {
  if (fs::is_directory(where)) return load_catalog_dir(where);
  if (fs::is_regular_file(where)) return load_catalog_index(where);
  throw IoError("scene catalog '" + where.string() + "' not found");
}

}  // namespace slrobust::benchgen
