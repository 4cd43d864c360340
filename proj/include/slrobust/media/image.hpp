#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "slrobust/core/error.hpp"

namespace slrobust::media {

/// An RGB frame with values in [0, 1], stored row-major as (y, x, c).
class Frame {
 public:
  static constexpr std::size_t kChannels = 3;

  Frame() = default;

  Frame(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), data_(height * width * kChannels, fill) {
    if (height == 0 || width == 0) throw ShapeError("frame dimensions must be at least 1x1");
  }

  Frame(std::size_t height, std::size_t width, std::vector<double> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height == 0 || width == 0) throw ShapeError("frame dimensions must be at least 1x1");
    if (data_.size() != height * width * kChannels)
      throw ShapeError("frame data length " + std::to_string(data_.size()) + " != H*W*C " +
                       std::to_string(height * width * kChannels));
    for (double v : data_)
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("frame value outside [0,1]");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return kChannels; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * width_ + x) * kChannels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * width_ + x) * kChannels + c];
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Soft alpha matte; 1 marks the signer.
class Mask {
 public:
  Mask() = default;

  Mask(std::size_t height, std::size_t width, double fill = 1.0)
      : height_(height), width_(width), alpha_(height * width, fill) {
    if (!(fill >= 0.0 && fill <= 1.0)) throw ValidationError("mask alpha outside [0,1]");
  }

  Mask(std::size_t height, std::size_t width, std::vector<double> alpha)
      : height_(height), width_(width), alpha_(std::move(alpha)) {
    if (alpha_.size() != height * width)
      throw ShapeError("mask length " + std::to_string(alpha_.size()) + " != H*W " +
                       std::to_string(height * width));
    for (double a : alpha_)
      if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("mask alpha outside [0,1]");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  double& at(std::size_t y, std::size_t x) { return alpha_[y * width_ + x]; }
  double at(std::size_t y, std::size_t x) const { return alpha_[y * width_ + x]; }
  std::vector<double>& data() noexcept { return alpha_; }
  const std::vector<double>& data() const noexcept { return alpha_; }

  const std::vector<double>& alpha() const noexcept { return alpha_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> alpha_;
};

struct Video {
  std::string id;
  std::vector<Frame> frames;
  std::vector<std::string> glosses;

  std::size_t length() const noexcept { return frames.size(); }

  // Throws unless the video has at least one frame and all frames agree on size.
  void validate() const {
    if (frames.empty()) throw ValidationError("video '" + id + "' has no frames");
    for (std::size_t i = 1; i < frames.size(); ++i) {
      if (frames[i].height() != frames[0].height() || frames[i].width() != frames[0].width())
        throw ShapeError("video '" + id + "' frame " + std::to_string(i) +
                         " dimensions differ from frame 0");
    }
  }
};

struct SceneImage {
  std::string id;
  std::string class_label;
  Frame image;
};

struct AugmentConfig {
  double lambda_min = 0.1;
  double lambda_max = 0.6;
  double jitter_strength = 0.4;
  double rotation_max_deg = 15.0;
  std::size_t crop_size = 224;
  std::size_t resize_size = 256;
  double hflip_prob = 0.5;
  double dup_frac_max = 0.20;
  double del_frac_max = 0.20;

  void validate() const {
    if (!(0.0 <= lambda_min && lambda_min <= lambda_max && lambda_max <= 1.0))
      throw ValidationError("augment config requires 0 <= lambda_min <= lambda_max <= 1");
    auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!frac(hflip_prob) || !frac(dup_frac_max) || !frac(del_frac_max))
      throw ValidationError("augment config fractions must lie in [0,1]");
    if (jitter_strength < 0.0 || rotation_max_deg < 0.0)
      throw ValidationError("jitter strength and rotation range must be non-negative");
    if (crop_size == 0 || crop_size > resize_size)
      throw ValidationError("crop size must be in [1, resize size]");
  }
};

inline void require_same_dims(const Frame& a, const Frame& b, const char* a_name,
                              const char* b_name) {
  if (a.height() != b.height())
    throw ShapeError(std::string("height mismatch: ") + a_name + " " + std::to_string(a.height()) +
                     " vs " + b_name + " " + std::to_string(b.height()));
  if (a.width() != b.width())
    throw ShapeError(std::string("width mismatch: ") + a_name + " " + std::to_string(a.width()) +
                     " vs " + b_name + " " + std::to_string(b.width()));
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace slrobust::media
