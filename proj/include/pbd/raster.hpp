// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pbd {

/// Row-major single-channel image. `Tag` separates otherwise identical
/// pixel types (grayscale intensities vs. binary masks).
template <class T, class Tag = void>
struct Raster {
  int height = 0;
  int width = 0;
  std::vector<T> pixels;

  Raster() = default;
  Raster(int h, int w, T fill = T{}) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  T& operator()(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Raster&, const Raster&) = default;
};

struct MaskTag;
using GrayImage = Raster<std::uint8_t>;
/// Pixels are 0 or 1.
using BinaryMask = Raster<std::uint8_t, MaskTag>;
using FloatImage = Raster<double>;

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // interleaved

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, 0) {}
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Connected components under 8-connectivity; labels are 1..count in raster
/// scan order of each component's first pixel, 0 for background.
struct Components {
  int count = 0;
  std::vector<int> labels;
  std::vector<int> areas;  // indexed by label - 1
};

Components label_components(const BinaryMask& mask);
int count_components(const BinaryMask& mask);

BinaryMask flip_horizontal(const BinaryMask& mask);
GrayImage flip_horizontal(const GrayImage& image);
std::size_t mask_area(const BinaryMask& mask);

/// Binary P5 PGM. Masks are written as 0/255 and read back as 0/1.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const BinaryMask& mask);
GrayImage read_pgm(const std::filesystem::path& path);
BinaryMask read_mask_pgm(const std::filesystem::path& path);

/// Binary P6 PPM.
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

}  // namespace pbd
