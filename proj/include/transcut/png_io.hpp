#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "transcut/errors.hpp"
#include "transcut/image.hpp"

namespace transcut {

/// 8-bit raster as decoded from disk; channels is 1 (gray) or 3 (RGB).
struct Raster8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
};

inline Raster8 read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw ImageIoError("cannot read PNG " + path.string() + ": " + img.message);
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Raster8 out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.channels = color ? 3 : 1;
  out.data.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ImageIoError("corrupt PNG " + path.string() + ": " + msg);
  }
  return out;
}

inline void write_png_gray(const std::filesystem::path& path, int width, int height,
                           std::span<const std::uint8_t> pixels) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, pixels.data(), 0, nullptr))
    throw ImageIoError("cannot write PNG " + path.string() + ": " + img.message);
}

/// luma = 0.299 R + 0.587 G + 0.114 B, rounded to nearest.
inline Image to_luma(const Raster8& r) {
  Image out(r.width, r.height);
  if (r.channels == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = r.data[i];
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double y = 0.299 * r.data[3 * i] + 0.587 * r.data[3 * i + 1] + 0.114 * r.data[3 * i + 2];
    out.data[i] = static_cast<float>(std::lround(y));
  }
  return out;
}

inline std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

inline void write_image(const Image& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(img.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(img.data[i]);
  write_png_gray(path, img.width, img.height, px);
}

inline Image read_image(const std::filesystem::path& path) { return to_luma(read_png(path)); }

/// Masks serialize as {0 -> 0, 1 -> 255}.
inline void write_mask(const Mask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.data[i] ? 255 : 0;
  write_png_gray(path, mask.width, mask.height, px);
}

/// Any nonzero luma reads back as 1.
inline Mask read_mask(const std::filesystem::path& path) {
  const Image img = read_image(path);
  Mask m(img.width, img.height);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = img.data[i] > 0.0f ? 1 : 0;
  return m;
}

/// Linear min-max scaling to [0, 255]; a constant map serializes to all zeros.
inline std::vector<std::uint8_t> normalize_minmax(const ScalarMap& map) {
  std::vector<std::uint8_t> px(map.size(), 0);
  if (map.empty()) return px;
  double lo = map.data[0], hi = map.data[0];
  for (double v : map.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) return px;
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(255.0 * (map.data[i] - lo) / (hi - lo));
  return px;
}

inline void write_scalar_map(const ScalarMap& map, const std::filesystem::path& path) {
  write_png_gray(path, map.width, map.height, normalize_minmax(map));
}

}  // namespace transcut
