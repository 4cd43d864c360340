#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "slrobust/core/rng.hpp"
#include "slrobust/media/image.hpp"

namespace slrobust::media {

namespace detail {

// Bilinear sample with edge replication for out-of-range coordinates.
inline double sample_bilinear(const Frame& img, double sy, double sx, std::size_t c) {
  const double maxy = static_cast<double>(img.height() - 1);
  const double maxx = static_cast<double>(img.width() - 1);
  sy = std::clamp(sy, 0.0, maxy);
  sx = std::clamp(sx, 0.0, maxx);
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
  const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
  const double fy = sy - static_cast<double>(y0);
  const double fx = sx - static_cast<double>(x0);
  const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
  const double bot = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
  return top * (1.0 - fy) + bot * fy;
}

inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace detail

/// Bilinear resize with half-pixel centers.
inline Frame resize(const Frame& img, std::size_t h, std::size_t w) {
  if (h == 0 || w == 0) throw ValidationError("resize target must be at least 1x1");
  if (h == img.height() && w == img.width()) return img;
  Frame out(h, w);
  const double ry = static_cast<double>(img.height()) / static_cast<double>(h);
  const double rx = static_cast<double>(img.width()) / static_cast<double>(w);
  for (std::size_t y = 0; y < h; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * ry - 0.5;
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * rx - 0.5;
      for (std::size_t c = 0; c < Frame::kChannels; ++c)
        out.at(y, x, c) = clamp01(detail::sample_bilinear(img, sy, sx, c));
    }
  }
  return out;
}

inline Frame crop(const Frame& img, std::size_t top, std::size_t left, std::size_t h,
                  std::size_t w) {
  if (top + h > img.height() || left + w > img.width())
    throw ShapeError("crop window exceeds frame bounds");
  Frame out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < Frame::kChannels; ++c)
        out.at(y, x, c) = img.at(top + y, left + x, c);
  return out;
}

inline Frame hflip(const Frame& img) {
  Frame out(img.height(), img.width());
  const std::size_t w = img.width();
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < Frame::kChannels; ++c)
        out.at(y, x, c) = img.at(y, w - 1 - x, c);
  return out;
}

struct JitterFactors {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
};

/// Brightness, then contrast about the mean luma, then saturation about each
/// pixel's luma.
inline Frame apply_jitter(const Frame& img, const JitterFactors& f) {
  Frame out = img;
  auto& d = out.data();
  for (double& v : d) v = clamp01(v * f.brightness);

  double mean = 0.0;
  const std::size_t n = out.height() * out.width();
  for (std::size_t p = 0; p < n; ++p)
    mean += detail::luma(d[3 * p], d[3 * p + 1], d[3 * p + 2]);
  mean /= static_cast<double>(n);
  for (double& v : d) v = clamp01(mean + (v - mean) * f.contrast);

  for (std::size_t p = 0; p < n; ++p) {
    const double g = detail::luma(d[3 * p], d[3 * p + 1], d[3 * p + 2]);
    for (std::size_t c = 0; c < 3; ++c) d[3 * p + c] = clamp01(g + (d[3 * p + c] - g) * f.saturation);
  }
  return out;
}

inline Frame color_jitter(const Frame& img, Rng& rng, double strength) {
  if (strength < 0.0) throw ValidationError("jitter strength must be non-negative");
  if (strength == 0.0) return img;
  JitterFactors f;
  f.brightness = rng.uniform(1.0 - strength, 1.0 + strength);
  f.contrast = rng.uniform(1.0 - strength, 1.0 + strength);
  f.saturation = rng.uniform(1.0 - strength, 1.0 + strength);
  return apply_jitter(img, f);
}

/// Rotates the content counter-clockwise (as displayed, y pointing down) by
/// `degrees` about the frame center. Pixels sourced from outside the frame
/// replicate the nearest edge.
inline Frame rotate(const Frame& img, double degrees) {
  if (degrees == 0.0) return img;
  const double th = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(th);
  const double sn = std::sin(th);
  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
  Frame out(img.height(), img.width());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = cx + dx * cs - dy * sn;
      const double sy = cy + dx * sn + dy * cs;
      for (std::size_t c = 0; c < Frame::kChannels; ++c)
        out.at(y, x, c) = clamp01(detail::sample_bilinear(img, sy, sx, c));
    }
  return out;
}

inline Frame random_rotate(const Frame& img, Rng& rng, double max_deg) {
  if (max_deg < 0.0) throw ValidationError("rotation range must be non-negative");
  if (max_deg == 0.0) return img;
  return rotate(img, rng.uniform(-max_deg, max_deg));
}

/// One draw of the clip-level spatial augmentation, shared by every frame.
struct SpatialParams {
  std::size_t top = 0;
  std::size_t left = 0;
  bool flip = false;
};

inline SpatialParams draw_spatial_params(Rng& rng, const AugmentConfig& cfg) {
  const auto slack = static_cast<std::int64_t>(cfg.resize_size - cfg.crop_size);
  SpatialParams p;
  p.top = static_cast<std::size_t>(rng.integer(0, slack));
  p.left = static_cast<std::size_t>(rng.integer(0, slack));
  p.flip = rng.bernoulli(cfg.hflip_prob);
  return p;
}

inline Frame apply_spatial(const Frame& f, const SpatialParams& p, const AugmentConfig& cfg) {
  Frame out = crop(resize(f, cfg.resize_size, cfg.resize_size), p.top, p.left, cfg.crop_size,
                   cfg.crop_size);
  return p.flip ? hflip(out) : out;
}

inline Video spatial_augment(const Video& video, Rng& rng, const AugmentConfig& cfg = {}) {
  cfg.validate();
  const SpatialParams p = draw_spatial_params(rng, cfg);
  Video out{video.id, {}, video.glosses};
  out.frames.reserve(video.frames.size());
  for (const auto& f : video.frames) out.frames.push_back(apply_spatial(f, p, cfg));
  return out;
}

/// Returns, for each output frame, the index of the source frame it copies.
/// Duplicates sit right after their source; deletions are drawn afterwards
/// from the lengthened clip.
inline std::vector<std::size_t> temporal_plan(std::size_t length, Rng& rng,
                                              const AugmentConfig& cfg) {
  if (length == 0) throw ValidationError("temporal augmentation needs at least one frame");
  const auto max_dup = static_cast<std::int64_t>(
      std::floor(cfg.dup_frac_max * static_cast<double>(length)));
  const std::int64_t n_dup = max_dup > 0 ? rng.integer(0, max_dup) : 0;
  std::vector<std::size_t> copies(length, 1);
  for (std::int64_t i = 0; i < n_dup; ++i) ++copies[rng.index(length)];

  std::vector<std::size_t> plan;
  plan.reserve(length + static_cast<std::size_t>(n_dup));
  for (std::size_t i = 0; i < length; ++i) plan.insert(plan.end(), copies[i], i);

  const auto max_del = static_cast<std::int64_t>(
      std::floor(cfg.del_frac_max * static_cast<double>(plan.size())));
  const std::int64_t n_del = max_del > 0 ? rng.integer(0, max_del) : 0;
  if (n_del > 0) {
    std::vector<std::size_t> order(plan.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<bool> drop(plan.size(), false);
    for (std::int64_t i = 0; i < n_del; ++i) drop[order[static_cast<std::size_t>(i)]] = true;
    std::vector<std::size_t> kept;
    kept.reserve(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i)
      if (!drop[i]) kept.push_back(plan[i]);
    plan = std::move(kept);
  }
  return plan;
}

inline Video temporal_augment(const Video& video, Rng& rng, const AugmentConfig& cfg = {}) {
  const auto plan = temporal_plan(video.frames.size(), rng, cfg);
  Video out{video.id, {}, video.glosses};
  out.frames.reserve(plan.size());
  for (std::size_t src : plan) out.frames.push_back(video.frames[src]);
  return out;
}

}  // namespace slrobust::media
