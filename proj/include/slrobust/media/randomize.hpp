#pragma once

#include <vector>

#include "slrobust/core/error.hpp"
#include "slrobust/core/rng.hpp"
#include "slrobust/media/compose.hpp"
#include "slrobust/media/image.hpp"
#include "slrobust/media/transform.hpp"

namespace slrobust::media {

/// Prepares a scene for mixing: resize to the target size, then color jitter,
/// then rotation.
inline Frame augment_scene(const Frame& scene, std::size_t h, std::size_t w, Rng& rng,
                           const AugmentConfig& cfg) {
  Frame s = resize(scene, h, w);
  s = color_jitter(s, rng, cfg.jitter_strength);
  return random_rotate(s, rng, cfg.rotation_max_deg);
}

struct RandomizedVideo {
  Video video;
  double lambda = 0.0;
  std::size_t scene_index = 0;
};

/// Background randomization for a whole clip: one scene from `pool` and one
/// lambda per clip, mixed into every frame without a mask.
inline RandomizedVideo background_randomize(const Video& video, const std::vector<Frame>& pool,
                                            Rng& rng, const AugmentConfig& cfg) {
  if (pool.empty()) throw ValidationError("background randomization needs a non-empty scene pool");
  video.validate();
  RandomizedVideo out;
  out.scene_index = rng.index(pool.size());
  const Frame& f0 = video.frames.front();
  const Frame scene = augment_scene(pool[out.scene_index], f0.height(), f0.width(), rng, cfg);
  out.lambda = sample_lambda(rng, cfg);
  out.video.id = video.id;
  out.video.glosses = video.glosses;
  out.video.frames.reserve(video.frames.size());
  for (const auto& f : video.frames) out.video.frames.push_back(mixup_background(f, scene, out.lambda));
  return out;
}

}  // namespace slrobust::media
