#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slrobust/core/rng.hpp"
#include "slrobust/media/image.hpp"
#include "slrobust/media/png_io.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("slrobust_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

/// Every regular file under `root`, keyed by relative path, with contents.
inline std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  return out;
}

/// A frame whose pixels are exact multiples of 1/255, so PNG round trips are
/// lossless.
inline slrobust::media::Frame random_byte_frame(slrobust::Rng& rng, std::size_t h, std::size_t w) {
  slrobust::media::Frame f(h, w);
  for (double& v : f.data()) v = static_cast<double>(rng.integer(0, 255)) / 255.0;
  return f;
}

inline slrobust::media::Frame random_frame(slrobust::Rng& rng, std::size_t h, std::size_t w) {
  slrobust::media::Frame f(h, w);
  for (double& v : f.data()) v = rng.uniform();
  return f;
}

/// Writes a CSLR fixture: `n_videos` videos of `n_frames` frames each, masks
/// filled with `mask_value` (or random binary masks when negative), plus a
/// manifest. Returns the manifest path.
inline fs::path make_cslr_fixture(const fs::path& root, std::size_t n_videos, std::size_t n_frames,
                                  double mask_value, std::uint64_t seed = 1, std::size_t size = 8) {
  slrobust::Rng rng(seed);
  fs::create_directories(root);
  std::ofstream manifest(root / "cslr.jsonl");
  for (std::size_t v = 0; v < n_videos; ++v) {
    char id[32];
    std::snprintf(id, sizeof id, "vid%03zu", v);
    const fs::path fdir = root / "frames" / id;
    const fs::path mdir = root / "masks" / id;
    fs::create_directories(fdir);
    fs::create_directories(mdir);
    for (std::size_t f = 0; f < n_frames; ++f) {
      slrobust::media::save_frame(fdir / slrobust::media::frame_filename(f),
                                  random_byte_frame(rng, size, size));
      slrobust::media::Mask m(size, size, mask_value < 0 ? 0.0 : mask_value);
      if (mask_value < 0)
        for (double& a : m.data()) a = rng.bernoulli(0.5) ? 1.0 : 0.0;
      slrobust::media::save_mask(mdir / slrobust::media::frame_filename(f), m);
    }
    nlohmann::json row{{"video_id", id},
                       {"frames_dir", fs::path("frames") / id},
                       {"mask_dir", fs::path("masks") / id},
                       {"glosses", {"A", "B"}}};
    manifest << row.dump() << '\n';
  }
  return root / "cslr.jsonl";
}

/// Scene catalog tree `<root>/c<k>/img<j>.png` with `n_classes` classes.
inline fs::path make_scene_fixture(const fs::path& root, std::size_t n_classes,
                                   std::size_t per_class, std::uint64_t seed = 2,
                                   std::size_t size = 12) {
  slrobust::Rng rng(seed);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const fs::path dir = root / ("c" + std::to_string(c));
    fs::create_directories(dir);
    for (std::size_t j = 0; j < per_class; ++j)
      slrobust::media::save_frame(dir / ("img" + std::to_string(j) + ".png"),
                                  random_byte_frame(rng, size, size));
  }
  return root;
}

// ---------------------------------------------------------------------------
// Oracles

/// Minimal number of unit-cost edit operations, by exhaustive search over
/// every alignment (no memoization).
inline std::size_t edit_distance_exhaustive(const std::vector<std::string>& a,
                                            const std::vector<std::string>& b, std::size_t i = 0,
                                            std::size_t j = 0) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t diag = edit_distance_exhaustive(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = edit_distance_exhaustive(a, b, i + 1, j) + 1;
  const std::size_t ins = edit_distance_exhaustive(a, b, i, j + 1) + 1;
  return std::min({diag, del, ins});
}

/// Visits every label path of length T over V symbols.
inline void for_each_path(std::size_t T, std::size_t V,
                          const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> path(T, 0);
  for (;;) {
    f(path);
    std::size_t k = 0;
    while (k < T && ++path[k] == V) path[k++] = 0;
    if (k == T) return;
  }
}

}  // namespace testsupport
