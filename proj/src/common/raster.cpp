// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/raster.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pbd/error.hpp"

namespace pbd {

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

Components label_components(const BinaryMask& mask) {
  Components out;
  out.labels.assign(mask.pixels.size(), 0);
  std::vector<int> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
      if (mask.pixels[idx] == 0 || out.labels[idx] != 0) continue;
      const int label = ++out.count;
      int area = 0;
      out.labels[idx] = label;
      stack.assign(1, static_cast<int>(idx));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        ++area;
        const int cy = cur / mask.width;
        const int cx = cur % mask.width;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!mask.contains(nx, ny)) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * mask.width + nx;
            if (mask.pixels[nidx] != 0 && out.labels[nidx] == 0) {
              out.labels[nidx] = label;
              stack.push_back(static_cast<int>(nidx));
            }
          }
        }
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

int count_components(const BinaryMask& mask) { return label_components(mask).count; }

namespace {
template <class R>
R flip_impl(const R& in) {
  R out(in.height, in.width);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) out(in.width - 1 - x, y) = in(x, y);
  }
  return out;
}

void write_p5(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "P5\n" << width << " " << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

// Skips whitespace and '#' comments in a PNM header.
int read_header_int(std::istream& is, const std::filesystem::path& path) {
  while (true) {
    const int ch = is.peek();
    if (ch == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(ch)) {
      is.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(is >> value)) throw IoError("malformed PGM header: " + path.string());
  return value;
}
}  // namespace

BinaryMask flip_horizontal(const BinaryMask& mask) { return flip_impl(mask); }
GrayImage flip_horizontal(const GrayImage& image) { return flip_impl(image); }

std::size_t mask_area(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.pixels.begin(), mask.pixels.end(), [](auto v) { return v != 0; }));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_p5(path, image.width, image.height, image.pixels);
}

void write_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.pixels.size());
  std::transform(mask.pixels.begin(), mask.pixels.end(), bytes.begin(), [](auto v) { return v ? 255 : 0; });
  write_p5(path, mask.width, mask.height, bytes);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P5") throw IoError("not a binary PGM (P5): " + path.string());
  const int w = read_header_int(is, path);
  const int h = read_header_int(is, path);
  const int maxval = read_header_int(is, path);
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PGM geometry: " + path.string());
  is.get();
  GrayImage img(h, w);
  is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!is) throw IoError("truncated PGM: " + path.string());
  return img;
}

BinaryMask read_mask_pgm(const std::filesystem::path& path) {
  GrayImage img = read_pgm(path);
  BinaryMask mask(img.height, img.width);
  std::transform(img.pixels.begin(), img.pixels.end(), mask.pixels.begin(), [](auto v) { return v >= 128 ? 1 : 0; });
  return mask;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "P6\n" << image.width << " " << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace pbd
