#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "slrobust/media/image.hpp"

namespace slrobust::media {

namespace fs = std::filesystem;

/// 8-bit quantization with round-half-up.
inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::floor(clamp01(v) * 255.0 + 0.5));
}

inline double from_byte(std::uint8_t b) { return static_cast<double>(b) / 255.0; }

namespace detail {

inline std::vector<std::uint8_t> read_png(const fs::path& path, png_uint_32 format,
                                          std::size_t& height, std::size_t& width) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("corrupt PNG '" + path.string() + "': " + msg);
  }
  height = image.height;
  width = image.width;
  return buf;
}

inline void write_png(const fs::path& path, png_uint_32 format, std::size_t height,
                      std::size_t width, const std::vector<std::uint8_t>& buf) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.format = format;
  image.height = static_cast<png_uint_32>(height);
  image.width = static_cast<png_uint_32>(width);
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
}

}  // namespace detail

inline Frame load_frame(const fs::path& path) {
  std::size_t h = 0, w = 0;
  const auto buf = detail::read_png(path, PNG_FORMAT_RGB, h, w);
  std::vector<double> data(buf.size());
  std::transform(buf.begin(), buf.end(), data.begin(), from_byte);
  return Frame(h, w, std::move(data));
}

inline void save_frame(const fs::path& path, const Frame& frame) {
  std::vector<std::uint8_t> buf(frame.size());
  std::transform(frame.data().begin(), frame.data().end(), buf.begin(), to_byte);
  detail::write_png(path, PNG_FORMAT_RGB, frame.height(), frame.width(), buf);
}

inline Mask load_mask(const fs::path& path) {
  std::size_t h = 0, w = 0;
  const auto buf = detail::read_png(path, PNG_FORMAT_GRAY, h, w);
  std::vector<double> alpha(buf.size());
  std::transform(buf.begin(), buf.end(), alpha.begin(), from_byte);
  return Mask(h, w, std::move(alpha));
}

inline void save_mask(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> buf(mask.alpha().size());
  std::transform(mask.alpha().begin(), mask.alpha().end(), buf.begin(), to_byte);
  detail::write_png(path, PNG_FORMAT_GRAY, mask.height(), mask.width(), buf);
}

/// Sorted list of `*.png` files in a frame directory.
inline std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("frame directory '" + dir.string() + "' not found");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// `000001.png`, `000002.png`, ... (1-based, six digits).
inline std::string frame_filename(std::size_t index0) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", index0 + 1);
  return buf;
}

inline Video load_video(const fs::path& dir, std::string id = {}) {
  Video v;
  v.id = id.empty() ? dir.filename().string() : std::move(id);
  for (const auto& p : list_frames(dir)) v.frames.push_back(load_frame(p));
  v.validate();
  return v;
}

inline void save_video(const fs::path& dir, const Video& video) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < video.frames.size(); ++i)
    save_frame(dir / frame_filename(i), video.frames[i]);
}

}  // namespace slrobust::media
