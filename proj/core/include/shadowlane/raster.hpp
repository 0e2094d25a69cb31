// Dense interleaved rasters used throughout the pipeline.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace shadowlane {

template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || c <= 0) {
      throw std::invalid_argument("raster dimensions must be non-negative");
    }
  }

  [[nodiscard]] bool empty() const { return data.empty(); }
  [[nodiscard]] std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  [[nodiscard]] bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  [[nodiscard]] std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  [[nodiscard]] bool same_shape(const Raster& other) const {
    return width == other.width && height == other.height &&
           channels == other.channels;
  }
  friend bool operator==(const Raster&, const Raster&) = default;
};

using Image = Raster<std::uint8_t>;      // 8-bit, 1 or 3 channels
using FloatRaster = Raster<float>;
using Mask = Raster<std::uint8_t>;       // single channel, 0 or 255

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// ITU-R BT.601 luma of an RGB triple.
inline float luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return 0.299f * r + 0.587f * g + 0.114f * b;
}

inline FloatRaster to_luma(const Image& img) {
  FloatRaster out(img.width, img.height, 1);
  if (img.channels == 1) {
    std::transform(img.data.begin(), img.data.end(), out.data.begin(),
                   [](std::uint8_t v) { return static_cast<float>(v); });
    return out;
  }
  if (img.channels != 3) throw std::invalid_argument("expected 1 or 3 channels");
  for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i) {
    out.data[i] = luma(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
  }
  return out;
}

inline Image to_gray_u8(const FloatRaster& f) {
  Image out(f.width, f.height, 1);
  std::transform(f.data.begin(), f.data.end(), out.data.begin(),
                 [](float v) { return clamp_u8(v); });
  return out;
}

inline std::size_t count_nonzero(const Mask& m) {
  return static_cast<std::size_t>(
      std::count_if(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v != 0; }));
}

}  // namespace shadowlane
