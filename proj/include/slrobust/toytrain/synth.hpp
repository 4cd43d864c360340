#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "slrobust/benchgen/benchgen.hpp"
#include "slrobust/benchgen/catalog.hpp"
#include "slrobust/core/error.hpp"
#include "slrobust/core/rng.hpp"
#include "slrobust/media/compose.hpp"
#include "slrobust/media/image.hpp"
#include "slrobust/media/transform.hpp"

// Procedural stand-in for a studio sign-language corpus: a stylized signer
// (head, torso, two hands) on a monochrome backdrop. Each gloss is a hand
// pose held for a few frames with small motion, separated by rest poses.
namespace slrobust::toytrain {

using media::Frame;
using media::Mask;
using media::Video;

inline const std::vector<std::string>& texture_classes() {
  static const std::vector<std::string> k{"checker", "gradient", "noise", "stripes"};
  return k;
}

struct SynthConfig {
  std::size_t n_train = 60;
  std::size_t n_test = 20;
  std::size_t frame_size = 32;
  std::size_t vocab = 5;
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  double clean_background = 0.45;
  double background_jitter = 0.04;  // per-video variation of the monochrome value
  std::size_t textures_per_class = 16;
  double hand_size = 4.0;  // hand square side, in pixels of a 32-pixel frame
  std::uint64_t seed = 7;

  void validate() const {
    if (vocab < 2) throw ValidationError("synthetic vocabulary needs at least 2 glosses");
    if (min_len < 1 || max_len < min_len) throw ValidationError("invalid sequence length range");
    if (frame_size < 8) throw ValidationError("frame size must be at least 8");
    if (n_train < 1 || n_test < 1) throw ValidationError("dataset sizes must be positive");
    if (textures_per_class < 1) throw ValidationError("need at least one texture per class");
    if (!(hand_size > 0.0)) throw ValidationError("hand size must be positive");
  }
};

inline std::string gloss_name(std::size_t label) { return "G" + std::to_string(label); }

/// Inverse of gloss_name; 0 if the token is not a gloss of this vocabulary.
inline std::size_t gloss_label(const std::string& tok, std::size_t vocab) {
  if (tok.size() < 2 || tok[0] != 'G') return 0;
  try {
    const auto v = static_cast<std::size_t>(std::stoul(tok.substr(1)));
    return v >= 1 && v <= vocab ? v : 0;
  } catch (...) {
    return 0;
  }
}

struct SignerStyle {
  std::array<double, 3> skin{};
  std::array<double, 3> shirt{};
  int sway = 0;  // horizontal offset of the whole signer
};

struct HandPose {
  double y = 0.0;   // hand centre row, fraction of frame height
  double dx = 0.0;  // horizontal distance of each hand from the body axis, fraction of width
};

/// Pose of gloss `label` (1-based); label 0 is the rest pose.
inline HandPose gloss_pose(std::size_t label, std::size_t vocab) {
  if (label == 0) return {0.88, 0.25};
  const double step = vocab > 1 ? 0.62 / static_cast<double>(vocab - 1) : 0.0;
  return {0.12 + step * static_cast<double>(label - 1), (label % 2 == 1) ? 0.34 : 0.14};
}

/// The signer sprite and its exact alpha mask for one frame.
struct SpriteFrame {
  Frame rgb;
  Mask mask;
};

inline SpriteFrame render_signer(std::size_t size, const SignerStyle& style, const HandPose& pose,
                                 int jitter_x, int jitter_y, double hand_size = 4.0) {
  SpriteFrame s{Frame(size, size, 0.0), Mask(size, size, 0.0)};
  const double scale = static_cast<double>(size) / 32.0;
  const int n = static_cast<int>(size);
  const int cx = n / 2 + style.sway;
  auto paint = [&](int y, int x, const std::array<double, 3>& c) {
    if (y < 0 || x < 0 || y >= n || x >= n) return;
    for (std::size_t k = 0; k < 3; ++k) s.rgb.at(y, x, k) = c[k];
    s.mask.at(y, x) = 1.0;
  };
  const int torso_half = static_cast<int>(std::lround(5 * scale));
  const int torso_top = static_cast<int>(std::lround(11 * scale));
  for (int y = torso_top; y < n; ++y)
    for (int x = cx - torso_half; x <= cx + torso_half; ++x) paint(y, x, style.shirt);
  const double head_r = 3.2 * scale;
  const double head_y = 6.5 * scale;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double dy = y - head_y, dx = x - cx;
      if (dy * dy + dx * dx <= head_r * head_r) paint(y, x, style.skin);
    }
  const int hand = std::max(2, static_cast<int>(std::lround(hand_size * scale)));
  const int hy = static_cast<int>(std::lround(pose.y * n)) + jitter_y - hand / 2;
  const int hdx = static_cast<int>(std::lround(pose.dx * n));
  for (int side : {-1, 1}) {
    const int hx = cx + side * (hdx + jitter_x) - hand / 2;
    for (int y = hy; y < hy + hand; ++y)
      for (int x = hx; x < hx + hand; ++x) paint(y, x, style.skin);
  }
  return s;
}

/// One synthetic clip before compositing: sprites, masks and glosses.
struct SignClip {
  std::string id;
  std::vector<SpriteFrame> sprites;
  std::vector<std::size_t> labels;  // gloss labels, 1-based
  double background = 0.5;
};

inline SignClip make_clip(const std::string& id, const SynthConfig& cfg, Rng& rng) {
  SignClip clip;
  clip.id = id;
  clip.background = std::clamp(
      cfg.clean_background + rng.uniform(-cfg.background_jitter, cfg.background_jitter), 0.0, 1.0);
  SignerStyle style;
  style.skin = {rng.uniform(0.85, 0.95), rng.uniform(0.65, 0.75), rng.uniform(0.5, 0.6)};
  style.shirt = {rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2), rng.uniform(0.2, 0.35)};
  style.sway = static_cast<int>(rng.integer(-1, 1));

  const auto target_len = static_cast<std::size_t>(
      rng.integer(static_cast<std::int64_t>(cfg.min_len), static_cast<std::int64_t>(cfg.max_len)));
  std::vector<std::size_t> frame_labels;  // 0 = rest
  auto rest = [&] {
    const auto n = rng.integer(1, 2);
    for (std::int64_t i = 0; i < n; ++i) frame_labels.push_back(0);
  };
  rest();
  do {
    const auto g = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(cfg.vocab)));
    clip.labels.push_back(g);
    const auto hold = rng.integer(2, 3);
    for (std::int64_t i = 0; i < hold; ++i) frame_labels.push_back(g);
    rest();
  } while (frame_labels.size() + 4 <= target_len);

  for (std::size_t lab : frame_labels) {
    const int jx = static_cast<int>(rng.integer(-1, 1));
    const int jy = static_cast<int>(rng.integer(-1, 1));
    clip.sprites.push_back(
        render_signer(cfg.frame_size, style, gloss_pose(lab, cfg.vocab), jx, jy, cfg.hand_size));
  }
  return clip;
}

/// Composites every sprite of `clip` onto `scene` (already frame-sized).
inline Video render_clip(const SignClip& clip, const Frame& scene) {
  Video v;
  v.id = clip.id;
  for (std::size_t g : clip.labels) v.glosses.push_back(gloss_name(g));
  for (const auto& s : clip.sprites) v.frames.push_back(media::composite_matting(s.rgb, scene, s.mask));
  return v;
}

inline Frame monochrome(std::size_t size, double value) { return Frame(size, size, value); }

// ---------------------------------------------------------------------------
// Procedural scene textures

namespace detail {

inline std::array<double, 3> random_color(Rng& rng) {
  return {rng.uniform(), rng.uniform(), rng.uniform()};
}

inline void put(Frame& f, std::size_t y, std::size_t x, const std::array<double, 3>& c) {
  for (std::size_t k = 0; k < 3; ++k) f.at(y, x, k) = media::clamp01(c[k]);
}

}  // namespace detail

inline Frame make_texture(const std::string& kind, std::size_t size, Rng& rng) {
  Frame f(size, size);
  const auto a = detail::random_color(rng);
  const auto b = detail::random_color(rng);
  const double n = static_cast<double>(size);
  if (kind == "stripes") {
    const double th = rng.uniform(0.0, std::numbers::pi);
    const double period = rng.uniform(3.0, 9.0);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double u = std::cos(th) * static_cast<double>(x) + std::sin(th) * static_cast<double>(y);
        detail::put(f, y, x, std::fmod(u / period + 100.0, 1.0) < 0.5 ? a : b);
      }
  } else if (kind == "checker") {
    const auto cell = static_cast<std::size_t>(rng.integer(2, 7));
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) detail::put(f, y, x, ((y / cell + x / cell) % 2) ? a : b);
  } else if (kind == "noise") {
    const auto grid = static_cast<std::size_t>(rng.integer(3, 8));
    Frame coarse(grid, grid);
    for (double& v : coarse.data()) v = rng.uniform();
    f = media::resize(coarse, size, size);
  } else if (kind == "gradient") {
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double u = (std::cos(th) * (static_cast<double>(x) - n / 2) +
                          std::sin(th) * (static_cast<double>(y) - n / 2)) / n + 0.5;
        const double t = std::clamp(u, 0.0, 1.0);
        detail::put(f, y, x, {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t});
      }
  } else {
    throw ValidationError("unknown texture class '" + kind + "'");
  }
  return f;
}

/// In-memory scene catalog of procedural textures, `per_class` per class.
inline benchgen::SceneCatalog make_texture_catalog(std::size_t size, std::size_t per_class,
                                                   std::uint64_t seed) {
  benchgen::SceneCatalog cat;
  for (const auto& kind : texture_classes()) {
    Rng rng(derive_seed(seed, kind));
    for (std::size_t i = 0; i < per_class; ++i) {
      auto img = std::make_shared<const Frame>(make_texture(kind, size, rng));
      cat.add({kind + "/" + std::to_string(i), kind, {}, std::move(img)});
    }
  }
  return cat;
}

struct SyntheticDataset {
  std::vector<Video> train;
  std::vector<Video> test_clean;
  std::vector<Video> test_shifted;
  std::vector<SignClip> test_clips;       // sprites behind both test sets
  benchgen::SceneCatalog train_scenes;    // texture catalog for background randomization
  benchgen::SceneCatalog test_scenes;     // held-out textures behind test_shifted
};

inline SyntheticDataset gen_synthetic_dataset(const SynthConfig& cfg) {
  cfg.validate();
  SyntheticDataset ds;
  Rng train_rng(derive_seed(cfg.seed, "train"));
  for (std::size_t i = 0; i < cfg.n_train; ++i) {
    const auto clip = make_clip("train_" + std::to_string(i), cfg, train_rng);
    ds.train.push_back(render_clip(clip, monochrome(cfg.frame_size, clip.background)));
  }
  Rng test_rng(derive_seed(cfg.seed, "test"));
  for (std::size_t i = 0; i < cfg.n_test; ++i) {
    auto clip = make_clip("test_" + std::to_string(i), cfg, test_rng);
    ds.test_clean.push_back(render_clip(clip, monochrome(cfg.frame_size, clip.background)));
    ds.test_clips.push_back(std::move(clip));
  }

  ds.train_scenes = make_texture_catalog(cfg.frame_size, cfg.textures_per_class,
                                         derive_seed(cfg.seed, "train-scenes"));
  ds.test_scenes = make_texture_catalog(cfg.frame_size, cfg.textures_per_class,
                                        derive_seed(cfg.seed, "test-scenes"));

  // Shifted twins: the benchmark procedure applied to the test clips.
  const std::uint64_t shift_seed = derive_seed(cfg.seed, "shift");
  Rng subset_rng(derive_seed(shift_seed, "subset"));
  benchgen::SceneSubset subset(
      benchgen::select_scene_subset(ds.test_scenes, ds.test_clips.size(), subset_rng));
  for (const auto& clip : ds.test_clips) {
    Rng rng(benchgen::video_seed(shift_seed, 0, clip.id));
    const auto scene = benchgen::assign_scene(clip.id, subset, rng);
    ds.test_shifted.push_back(render_clip(clip, scene.load()));
  }
  return ds;
}

}  // namespace slrobust::toytrain
