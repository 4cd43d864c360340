#pragma once

#include <algorithm>

#include "slrobust/core/rng.hpp"
#include "slrobust/media/image.hpp"

namespace slrobust::media {

namespace detail {

// a*fg + (1-a)*bg, clamped to the closed interval spanned by fg and bg.
// Rounding can push the raw sum one ulp outside that interval.
inline double blend(double fg, double bg, double a) {
  const double v = a * fg + (1.0 - a) * bg;
  return std::clamp(v, std::min(fg, bg), std::max(fg, bg));
}

}  // namespace detail

/// Alpha-composites the signer onto a new scene: out = m*sign + (1-m)*scene.
inline Frame composite_matting(const Frame& sign, const Frame& scene, const Mask& mask) {
  require_same_dims(sign, scene, "sign", "scene");
  if (mask.height() != sign.height())
    throw ShapeError("height mismatch: sign " + std::to_string(sign.height()) + " vs mask " +
                     std::to_string(mask.height()));
  if (mask.width() != sign.width())
    throw ShapeError("width mismatch: sign " + std::to_string(sign.width()) + " vs mask " +
                     std::to_string(mask.width()));

  Frame out(sign.height(), sign.width());
  for (std::size_t y = 0; y < sign.height(); ++y)
    for (std::size_t x = 0; x < sign.width(); ++x) {
      const double a = mask.at(y, x);
      for (std::size_t c = 0; c < Frame::kChannels; ++c)
        out.at(y, x, c) = detail::blend(sign.at(y, x, c), scene.at(y, x, c), a);
    }
  return out;
}

/// Background randomization without a mask: out = lambda*scene + (1-lambda)*sign.
/// Computed through the same kernel as composite_matting with alpha = 1-lambda,
/// so the two agree bit for bit.
inline Frame mixup_background(const Frame& sign, const Frame& scene, double lambda) {
  require_same_dims(sign, scene, "sign", "scene");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ValidationError("mixup lambda " + std::to_string(lambda) + " outside [0,1]");
  const double a = 1.0 - lambda;
  Frame out(sign.height(), sign.width());
  const auto& s = sign.data();
  const auto& b = scene.data();
  auto& o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = detail::blend(s[i], b[i], a);
  return out;
}

inline double sample_lambda(Rng& rng, const AugmentConfig& cfg = {}) {
  return rng.uniform(cfg.lambda_min, cfg.lambda_max);
}

}  // namespace slrobust::media
