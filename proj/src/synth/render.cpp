// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "pbd/random.hpp"
#include "pbd/synth/generator.hpp"

namespace pbd::synth {

namespace {

void fill_rect(FloatImage& canvas, const Rect& r, double value) {
  const int x0 = std::max(0, static_cast<int>(std::floor(r.x0)));
  const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(r.x1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(r.y0)));
  const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(r.y1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) canvas(x, y) = value;
  }
}

// Anti-aliased segment with flat caps: pixels whose projection falls outside
// the segment are untouched, so the lower end is the stroke's lowest point.
void draw_segment(FloatImage& canvas, double ax, double ay, double bx, double by, double thickness, double value) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  if (len2 <= 0.0) return;
  const double half = 0.5 * thickness;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - half - 1)));
  const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max(ax, bx) + half + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - half - 1)));
  const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(std::max(ay, by) + half + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double t = ((x - ax) * dx + (y - ay) * dy) / len2;
      if (t < -1e-9 || t > 1.0 + 1e-9) continue;
      const double px = ax + t * dx - x;
      const double py = ay + t * dy - y;
      const double dist = std::sqrt(px * px + py * py);
      const double coverage = std::clamp(half + 0.5 - dist, 0.0, 1.0);
      if (coverage > 0.0) canvas(x, y) += coverage * (value - canvas(x, y));
    }
  }
}

void gaussian_blur(FloatImage& img, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (auto& k : kernel) k /= total;
  FloatImage tmp(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img(std::clamp(x + i, 0, img.width - 1), y);
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp(x, std::clamp(y + i, 0, img.height - 1));
      img(x, y) = acc;
    }
  }
}

double plate_intensity(Polarity p, const RenderConfig& cfg) {
  return p == Polarity::Anode ? cfg.anode_intensity : cfg.cathode_intensity;
}

}  // namespace

GrayImage render(const BatteryScene& scene, const RenderConfig& cfg) {
  FloatImage canvas(scene.height, scene.width);
  for (int y = 0; y < scene.height; ++y) {
    const double v = cfg.background - 15.0 * y / std::max(1, scene.height - 1);
    for (int x = 0; x < scene.width; ++x) canvas(x, y) = v;
  }

  const SceneLayout& layout = scene.layout;
  fill_rect(canvas, layout.body, cfg.body);
  if (layout.tray) fill_rect(canvas, *layout.tray, cfg.tray_intensity);
  if (layout.separator) {
    fill_rect(canvas, *layout.separator,
              cfg.anode_intensity + cfg.separator_contrast * (cfg.body - cfg.anode_intensity));
  }
  for (const auto& st : layout.distractors) {
    draw_segment(canvas, st.top_x, st.top_y, st.endpoint.x, st.endpoint.y, st.thickness,
                 plate_intensity(st.polarity, cfg));
  }
  for (const auto& st : layout.plates) {
    draw_segment(canvas, st.top_x, st.top_y, st.endpoint.x, st.endpoint.y, st.thickness,
                 plate_intensity(st.polarity, cfg));
  }
  for (const auto& f : layout.forks) {
    draw_segment(canvas, f.branch_x, f.branch_y, f.tip_x, f.tip_y, f.thickness, cfg.anode_intensity);
  }
  for (const auto& t : layout.tabs) fill_rect(canvas, t, cfg.tab_intensity);
  for (const auto& r : layout.occluders) fill_rect(canvas, r, cfg.body);

  gaussian_blur(canvas, layout.blurred ? cfg.blur_sigma_blur : cfg.blur_sigma_clear);

  Rng rng(mix_seed(scene.seed ^ 0x6e6f697365ULL));
  GrayImage out(scene.height, scene.width);
  for (std::size_t i = 0; i < canvas.pixels.size(); ++i) {
    const double v = canvas.pixels[i] + (cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }
  return out;
}

}  // namespace pbd::synth
