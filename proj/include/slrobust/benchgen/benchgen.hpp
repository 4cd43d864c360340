#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "slrobust/benchgen/catalog.hpp"
#include "slrobust/benchgen/records.hpp"
#include "slrobust/core/error.hpp"
#include "slrobust/core/log.hpp"
#include "slrobust/core/rng.hpp"
#include "slrobust/media/compose.hpp"
#include "slrobust/media/png_io.hpp"
#include "slrobust/media/transform.hpp"

// Background-shift benchmark synthesis: spread scene classes evenly over the
// sign videos, give each video one scene image, and matte every frame onto it.
namespace slrobust::benchgen {

struct BenchmarkConfig {
  std::uint64_t master_seed = 0;
  int n_splits = 3;
  // Splits are numbered first_split_id, first_split_id + 1, ... so that
  // separate subsets (e.g. dev and test) can use disjoint ranges.
  int first_split_id = 0;
  std::size_t k_per_class = 1;
  unsigned jobs = 1;

  void validate() const {
    if (n_splits < 1) throw ValidationError("benchmark needs at least one split");
    if (k_per_class < 1) throw ValidationError("K must be at least 1");
    if (jobs < 1) throw ValidationError("jobs must be at least 1");
  }
};

inline std::uint64_t split_seed(std::uint64_t master_seed, int split_id) {
  return derive_seed(derive_seed(master_seed, "split"), static_cast<std::uint64_t>(split_id));
}

/// Stable per-video seed; independent of processing order.
inline std::uint64_t video_seed(std::uint64_t master_seed, int split_id, std::string_view video_id) {
  return derive_seed(split_seed(master_seed, split_id), video_id);
}

namespace detail {

// k entries of `pool`: without replacement when it is large enough, with
// replacement (and a warning) otherwise.
inline std::vector<SceneEntry> draw_from_class(const std::string& label,
                                               const std::vector<SceneEntry>& pool, std::size_t k,
                                               Rng& rng) {
  std::vector<SceneEntry> out;
  out.reserve(k);
  if (k <= pool.size()) {
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[idx[i]]);
  } else {
    log_warning("scene class '" + label + "' has " + std::to_string(pool.size()) +
                " images, sampling " + std::to_string(k) + " with replacement");
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[rng.index(pool.size())]);
  }
  return out;
}

}  // namespace detail

/// Picks exactly `n_videos` scene images with per-class counts differing by at
/// most one. Which classes receive the extra image is random.
inline std::vector<SceneEntry> select_scene_subset(const SceneCatalog& catalog,
                                                   std::size_t n_videos, Rng& rng) {
  catalog.validate();
  if (n_videos == 0) throw ValidationError("scene subset needs at least one video");
  const std::size_t n_classes = catalog.class_count();
  const std::size_t base = n_videos / n_classes;
  const std::size_t extra = n_videos % n_classes;

  std::vector<std::size_t> order(n_classes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<std::size_t> counts(n_classes, base);
  for (std::size_t i = 0; i < extra; ++i) ++counts[order[i]];

  std::vector<SceneEntry> subset;
  subset.reserve(n_videos);
  std::size_t c = 0;
  for (const auto& [label, pool] : catalog.classes) {
    if (counts[c] > 0) {
      auto drawn = detail::draw_from_class(label, pool, counts[c], rng);
      subset.insert(subset.end(), drawn.begin(), drawn.end());
    }
    ++c;
  }
  return subset;
}

/// The not-yet-assigned part of a scene subset, grouped by class.
class SceneSubset {
 public:
  explicit SceneSubset(const std::vector<SceneEntry>& entries) {
    for (const auto& e : entries) remaining_[e.class_label].push_back(e);
    for (const auto& [_, v] : remaining_) size_ += v.size();
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  /// Draws a class uniformly among those with images left, then an image of
  /// that class uniformly, and removes it.
  SceneEntry take(Rng& rng) {
    if (empty()) throw ValidationError("scene subset exhausted");
    std::vector<std::map<std::string, std::vector<SceneEntry>>::iterator> live;
    for (auto it = remaining_.begin(); it != remaining_.end(); ++it)
      if (!it->second.empty()) live.push_back(it);
    auto& pool = live[rng.index(live.size())]->second;
    const std::size_t pick = rng.index(pool.size());
    SceneEntry e = std::move(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    --size_;
    return e;
  }

 private:
  std::map<std::string, std::vector<SceneEntry>> remaining_;
  std::size_t size_ = 0;
};

/// `rng` should be seeded from video_seed(master, split, video_id).
inline SceneEntry assign_scene(std::string_view video_id, SceneSubset& subset, Rng& rng) {
  if (subset.empty())
    throw ValidationError("no scene image left to assign to video '" + std::string(video_id) + "'");
  return subset.take(rng);
}

/// Exactly K images per class; size is K * class_count.
inline std::vector<SceneEntry> select_training_pool(const SceneCatalog& catalog, std::size_t k,
                                                    Rng& rng) {
  catalog.validate();
  if (k < 1) throw ValidationError("K must be at least 1");
  std::vector<SceneEntry> pool;
  pool.reserve(k * catalog.class_count());
  for (const auto& [label, images] : catalog.classes) {
    auto drawn = detail::draw_from_class(label, images, k, rng);
    pool.insert(pool.end(), drawn.begin(), drawn.end());
  }
  return pool;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void validate_video_id(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos)
    throw ValidationError("video id '" + id + "' is not usable as a directory name");
}

struct VideoJob {
  const CslrEntry* entry = nullptr;
  std::vector<fs::path> frames;
  std::vector<fs::path> masks;
  SceneEntry scene;
  SampleRecord record;
};

// Runs f(i) for i in [0, n) on `jobs` threads. The exception of the lowest
// failing index is rethrown, so errors do not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline fs::path split_dir(const fs::path& out_root, int split_id) {
  return out_root / ("split_" + std::to_string(split_id));
}

/// Generates one split under `out_root/split_<id>/`: a `manifest.jsonl` and a
/// `videos/<video_id>/` frame directory per input video. Returns the manifest
/// rows sorted by video id.
inline std::vector<SampleRecord> generate_split(const std::vector<CslrEntry>& videos,
                                                const SceneCatalog& catalog,
                                                const BenchmarkConfig& config, int split_id,
                                                const fs::path& out_root) {
  config.validate();
  catalog.validate();
  if (videos.empty()) throw ValidationError("CSLR manifest is empty");

  std::vector<const CslrEntry*> sorted;
  for (const auto& v : videos) sorted.push_back(&v);
  std::sort(sorted.begin(), sorted.end(),
            [](const CslrEntry* a, const CslrEntry* b) { return a->video_id < b->video_id; });

  // Validate every input path before any pixels are touched.
  std::vector<detail::VideoJob> jobs(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const CslrEntry& e = *sorted[i];
    detail::validate_video_id(e.video_id);
    if (i > 0 && sorted[i - 1]->video_id == e.video_id)
      throw ValidationError("duplicate video id '" + e.video_id + "'");
    if (e.mask_dir.empty())
      throw ValidationError("video '" + e.video_id + "' has no mask directory");
    auto& job = jobs[i];
    job.entry = &e;
    job.frames = media::list_frames(e.frames_dir);
    if (job.frames.empty()) throw ValidationError("video '" + e.video_id + "' has no frames");
    for (std::size_t f = 0; f < job.frames.size(); ++f) {
      fs::path m = e.mask_dir / job.frames[f].filename();
      if (!fs::is_regular_file(m))
        throw IoError("video '" + e.video_id + "': missing mask for frame index " +
                      std::to_string(f) + " (" + m.string() + ")");
      job.masks.push_back(std::move(m));
    }
  }

  // Scene assignment is sequential in video-id order; each draw uses the
  // video's own seed.
  Rng subset_rng(derive_seed(split_seed(config.master_seed, split_id), "subset"));
  SceneSubset subset(select_scene_subset(catalog, jobs.size(), subset_rng));
  for (auto& job : jobs) {
    const std::uint64_t seed = video_seed(config.master_seed, split_id, job.entry->video_id);
    Rng rng(seed);
    job.scene = assign_scene(job.entry->video_id, subset, rng);
    job.record = {job.entry->video_id,
                  fs::path("videos") / job.entry->video_id,
                  job.entry->mask_dir,
                  job.entry->glosses,
                  job.scene.class_label,
                  job.scene.id,
                  split_id,
                  seed};
  }

  const fs::path dir = split_dir(out_root, split_id);
  fs::create_directories(dir / "videos");
  detail::parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    const fs::path out_dir = dir / job.record.frames_dir;
    fs::create_directories(out_dir);
    const media::Frame scene_full = job.scene.load();
    media::Frame scene;
    for (std::size_t f = 0; f < job.frames.size(); ++f) {
      const media::Frame sign = media::load_frame(job.frames[f]);
      const media::Mask mask = media::load_mask(job.masks[f]);
      if (scene.empty() || scene.height() != sign.height() || scene.width() != sign.width())
        scene = media::resize(scene_full, sign.height(), sign.width());
      if (mask.height() != sign.height() || mask.width() != sign.width())
        throw ValidationError("video '" + job.entry->video_id + "': mask for frame index " +
                              std::to_string(f) + " has different dimensions than the frame");
      media::save_frame(out_dir / media::frame_filename(f),
                        media::composite_matting(sign, scene, mask));
    }
  });

  std::vector<SampleRecord> rows;
  rows.reserve(jobs.size());
  for (auto& job : jobs) rows.push_back(std::move(job.record));
  write_manifest(dir / "manifest.jsonl", rows);
  return rows;
}

/// Runs generate_split for every split id of the configuration.
inline std::vector<std::vector<SampleRecord>> generate_benchmark(
    const std::vector<CslrEntry>& videos, const SceneCatalog& catalog,
    const BenchmarkConfig& config, const fs::path& out_root) {
  config.validate();
  std::vector<std::vector<SampleRecord>> out;
  for (int s = 0; s < config.n_splits; ++s)
    out.push_back(generate_split(videos, catalog, config, config.first_split_id + s, out_root));
  return out;
}

}  // namespace slrobust::benchgen
