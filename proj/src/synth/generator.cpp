// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pbd/error.hpp"
#include "pbd/random.hpp"

namespace pbd::synth {

RenderConfig RenderConfig::full_resolution() {
  RenderConfig cfg;
  cfg.height = 352;
  cfg.width = 352;
  cfg.anode_count = {8, 60};
  cfg.pitch = {6.0, 40.0};
  cfg.overhang = {4.0, 20.0};
  cfg.thickness = {1.6, 3.0};
  cfg.margin = 12;
  cfg.side_reserve = 30;
  return cfg;
}

void RenderConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("render config: " + what); };
  if (height < 32 || width < 32) fail("image must be at least 32x32");
  if (anode_count.lo < 2 || anode_count.hi < anode_count.lo) fail("anode_count range must satisfy 2 <= lo <= hi");
  if (pitch.lo <= 0 || pitch.hi < pitch.lo) fail("pitch range empty or non-positive");
  if (overhang.lo <= 0 || overhang.hi < overhang.lo) fail("overhang range empty or non-positive");
  if (thickness.lo < 1.0 || thickness.hi < thickness.lo) fail("thickness range must satisfy 1 <= lo <= hi");
  if (min_pitch < 4.0) fail("min_pitch must be >= 4");
  if (margin < 4) fail("margin must be >= 4");
  if (pure_fraction < 0 || pure_fraction > 1) fail("pure_fraction must lie in [0, 1]");
  if (max_interference < 1 || max_interference > 7) fail("max_interference must lie in [1, 7]");
  if (train_fraction < 0 || train_fraction > 1) fail("train_fraction must lie in [0, 1]");
  if (separator_contrast <= 0 || separator_contrast > 1) fail("separator_contrast must lie in (0, 1]");
  const double densest = std::max(min_pitch, pitch.lo * std::min({close_scale, 1.0, long_scale}) * dense_factor);
  const double needed = densest * (anode_count.lo - 1) + 2.0 * margin + 2.0 * side_reserve;
  if (needed > width) {
    fail("minimum pitch x (anode_count.lo - 1) plus margins (" + std::to_string(needed) +
         " px) exceeds image width " + std::to_string(width));
  }
}

namespace {

double shot_scale(Shot shot, const RenderConfig& cfg) {
  switch (shot) {
    case Shot::Close: return cfg.close_scale;
    case Shot::Long: return cfg.long_scale;
    default: return 1.0;
  }
}

bool near_any(double x, double y, const std::vector<Point>& pts, double radius) {
  return std::any_of(pts.begin(), pts.end(), [&](const Point& p) { return std::hypot(p.x - x, p.y - y) < radius; });
}

}  // namespace

BatteryScene sample_scene(std::uint64_t seed, const RenderConfig& cfg, std::optional<AttributeSet> forced) {
  cfg.validate();
  Rng rng(mix_seed(seed));

  BatteryScene scene;
  scene.seed = seed;
  scene.height = cfg.height;
  scene.width = cfg.width;

  if (forced) {
    scene.attributes = forced->empty() ? AttributeSet{Attribute::P} : *forced;
  } else if (rng.uniform() < cfg.pure_fraction) {
    scene.attributes = AttributeSet{Attribute::P};
  } else {
    std::vector<Attribute> pool = {Attribute::T, Attribute::A, Attribute::PI, Attribute::BI,
                                   Attribute::TRI, Attribute::TAI, Attribute::SI};
    const int k = rng.uniform_int(1, cfg.max_interference);
    for (int i = 0; i < k; ++i) {
      const int pick = rng.uniform_int(i, static_cast<int>(pool.size()) - 1);
      std::swap(pool[i], pool[pick]);
      scene.attributes.insert(pool[i]);
    }
  }
  const auto& attrs = scene.attributes;
  const bool tilted = attrs.contains(Attribute::T);

  scene.shot = static_cast<Shot>(rng.uniform_int(0, 2));
  SceneLayout& layout = scene.layout;
  layout.blurred = rng.uniform() < cfg.blur_fraction;
  const double s = shot_scale(scene.shot, cfg);

  double p_lo = std::max(cfg.min_pitch, cfg.pitch.lo * s);
  double p_hi = std::max(p_lo, cfg.pitch.hi * s);
  if (tilted) {
    p_lo = std::max(cfg.min_pitch, p_lo * cfg.dense_factor);
    p_hi = std::max(p_lo, p_hi * cfg.dense_factor);
  }

  double left = cfg.margin;
  double right = cfg.margin;
  const bool pi_left = rng.uniform() < 0.5;
  const bool tray_left = rng.uniform() < 0.5;
  if (attrs.contains(Attribute::PI)) (pi_left ? left : right) += cfg.side_reserve;
  if (attrs.contains(Attribute::TRI)) (tray_left ? left : right) += cfg.side_reserve * 0.6;

  const double avail = cfg.width - left - right;
  const int n_max = static_cast<int>(std::floor(avail / p_lo)) + 1;
  if (n_max < 2) throw ConfigError("render config: image too narrow for two plates at the sampled pitch");
  const int n = std::min(rng.uniform_int(cfg.anode_count.lo, cfg.anode_count.hi), n_max);
  const double pitch = rng.uniform(p_lo, std::max(p_lo, std::min(p_hi, avail / (n - 1))));
  const double span = pitch * (n - 1);
  const double x0 = left + rng.uniform(0.0, std::max(0.0, avail - span));
  layout.pitch = pitch;

  const double H = cfg.height;
  const double top_y = std::round(rng.uniform(0.12, 0.2) * H);
  const double base_y = std::round(rng.uniform(0.62, 0.76) * H);
  const double thickness = rng.uniform(cfg.thickness.lo, cfg.thickness.hi);
  const double wave_phase = rng.uniform(0.0, 6.283185307179586);
  const double slope = tilted ? (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, cfg.tilt_max) : 0.0;

  std::vector<double> ax(n);
  for (int i = 0; i < n; ++i) ax[i] = std::round(x0 + i * pitch);
  for (int i = 0; i < n; ++i) {
    double y = base_y + std::clamp(std::round(rng.normal() * 0.6), -1.0, 1.0);
    if (tilted) y += std::round(2.0 * std::sin(wave_phase + 0.6 * i));
    scene.anode.push_back(Point{static_cast<int>(ax[i]), static_cast<int>(y)});
  }
  const double oh_lo = cfg.overhang.lo * s;
  const double oh_hi = cfg.overhang.hi * s;
  for (int j = 0; j + 1 < n; ++j) {
    double cx = std::round(0.5 * (ax[j] + ax[j + 1]) + rng.uniform(-0.08, 0.08) * pitch);
    cx = std::clamp(cx, ax[j] + 2.0, ax[j + 1] - 2.0);
    const double lower = std::max(scene.anode[j].y, scene.anode[j + 1].y);
    double cy = std::round(lower - rng.uniform(oh_lo, oh_hi));
    cy = std::max(cy, top_y + 10.0);
    scene.cathode.push_back(Point{static_cast<int>(cx), static_cast<int>(cy)});
  }

  if (attrs.contains(Attribute::A) && n >= 3) {
    // Ordering violation: the outermost anode is replaced by a cathode.
    const bool at_end = rng.uniform() < 0.5;
    const Point removed = at_end ? scene.anode.back() : scene.anode.front();
    if (at_end) {
      scene.anode.pop_back();
    } else {
      scene.anode.erase(scene.anode.begin());
    }
    const double cy = std::max(top_y + 10.0, std::round(removed.y - rng.uniform(oh_lo, oh_hi)));
    // Keep at least kMinEndpointGap to the neighbouring cathode so point labels stay separable.
    const Point& nb = at_end ? scene.cathode.back() : scene.cathode.front();
    const int gap = std::abs(removed.x - nb.x);
    const int push = std::max(0, kMinEndpointGap - gap);
    scene.cathode.push_back(Point{removed.x + (at_end ? push : -push), static_cast<int>(cy)});
    sort_points(scene.cathode);
  }

  auto stroke_for = [&](const Point& e, Polarity pol) {
    PlateStroke st;
    st.polarity = pol;
    st.endpoint = e;
    st.top_y = top_y;
    st.top_x = e.x + slope * (e.y - top_y) + (tilted ? 0.0 : rng.uniform(-0.02, 0.02) * (e.y - top_y));
    st.thickness = thickness;
    return st;
  };
  for (const auto& p : scene.anode) layout.plates.push_back(stroke_for(p, Polarity::Anode));
  for (const auto& p : scene.cathode) layout.plates.push_back(stroke_for(p, Polarity::Cathode));
  std::sort(layout.plates.begin(), layout.plates.end(),
            [](const PlateStroke& a, const PlateStroke& b) { return a.endpoint.x < b.endpoint.x; });

  const double first_x = layout.plates.front().endpoint.x;
  const double last_x = layout.plates.back().endpoint.x;
  int max_y = 0;
  for (const auto& p : layout.plates) max_y = std::max(max_y, p.endpoint.y);
  int min_cathode_y = max_y;
  for (const auto& p : scene.cathode) min_cathode_y = std::min(min_cathode_y, p.y);
  layout.body = Rect{first_x - 0.6 * pitch, top_y - 4.0, last_x + 0.6 * pitch,
                     std::min(H - 2.0, max_y + rng.uniform(6.0, 10.0))};

  std::vector<Point> all_endpoints = scene.anode;
  all_endpoints.insert(all_endpoints.end(), scene.cathode.begin(), scene.cathode.end());

  if (attrs.contains(Attribute::BI)) {
    const int forks = rng.uniform_int(1, 2);
    for (int f = 0; f < forks; ++f) {
      const auto& plate = layout.plates[rng.uniform_int(0, static_cast<int>(layout.plates.size()) - 1)];
      const double len = rng.uniform(5.0, 10.0);
      const double by = plate.endpoint.y - len;
      const double t = (by - plate.top_y) / std::max(1.0, plate.endpoint.y - plate.top_y);
      const double bx = plate.top_x + t * (plate.endpoint.x - plate.top_x);
      for (int attempt = 0; attempt < 8; ++attempt) {
        const double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double tx = bx + dir * rng.uniform(0.3, 0.45) * pitch;
        const double ty = plate.endpoint.y - rng.uniform(1.0, 0.6 * len);
        if (!near_any(std::round(tx), std::round(ty), all_endpoints, 2.0)) {
          layout.forks.push_back(Fork{bx, by, tx, ty, std::max(1.2, 0.75 * thickness)});
          break;
        }
      }
    }
  }

  if (attrs.contains(Attribute::TRI)) {
    const double gap = rng.uniform(3.0, 5.0);
    const double w = rng.uniform(4.0, 7.0);
    layout.tray = tray_left ? Rect{first_x - gap - w, 0.0, first_x - gap, H}
                            : Rect{last_x + gap, 0.0, last_x + gap + w, H};
  }

  if (attrs.contains(Attribute::TAI)) {
    const int tabs = rng.uniform_int(1, 2);
    const int np = static_cast<int>(layout.plates.size());
    for (int k = 0; k < tabs; ++k) {
      const int first = rng.uniform_int(0, std::max(0, np - 2));
      const int last = std::min(np - 1, first + rng.uniform_int(1, 3));
      layout.tabs.push_back(Rect{layout.plates[first].top_x - 2.0, std::max(0.0, top_y - 8.0),
                                 layout.plates[last].top_x + 2.0, top_y + rng.uniform(4.0, 10.0)});
    }
  }

  if (attrs.contains(Attribute::SI)) {
    layout.separator = Rect{layout.body.x0, min_cathode_y - 3.0, layout.body.x1, max_y + 2.0};
  }

  if (attrs.contains(Attribute::A)) {
    const int np = static_cast<int>(layout.plates.size());
    const int first = rng.uniform_int(0, np - 1);
    const int last = std::min(np - 1, first + rng.uniform_int(0, 2));
    const double len = base_y - top_y;
    layout.occluders.push_back(Rect{layout.plates[first].top_x - 0.5 * pitch, top_y + 0.2 * len,
                                    layout.plates[last].top_x + 0.5 * pitch, top_y + rng.uniform(0.4, 0.6) * len});
  }

  if (attrs.contains(Attribute::PI)) {
    const double other_pitch = pitch * rng.uniform(0.8, 1.2);
    const double other_base = base_y + (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(5.0, 15.0);
    const double limit = cfg.side_reserve - 4.0;
    for (int k = 0;; ++k) {
      const double offset = k * other_pitch * 0.5 - rng.uniform(0.0, 2.0);
      if (offset > limit) break;
      const double x = pi_left ? offset : cfg.width - 1 - offset;
      const bool anode_like = k % 2 == 0;
      const double ey = std::clamp(other_base - (anode_like ? 0.0 : rng.uniform(oh_lo, oh_hi)), top_y + 10.0, H - 3.0);
      PlateStroke st;
      st.polarity = anode_like ? Polarity::Anode : Polarity::Cathode;
      st.endpoint = Point{static_cast<int>(std::round(x)), static_cast<int>(std::round(ey))};
      st.top_x = x;
      st.top_y = std::max(0.0, top_y - rng.uniform(2.0, 8.0));
      st.thickness = thickness;
      layout.distractors.push_back(st);
    }
  }

  scene.split = assign_split(scene, cfg.tough_pitch_threshold);
  return scene;
}

Split assign_split(const BatteryScene& scene, double tough_pitch_threshold) {
  const auto& a = scene.attributes;
  int interference = 0;
  for (auto attr : {Attribute::T, Attribute::PI, Attribute::BI, Attribute::TRI, Attribute::TAI}) {
    if (a.contains(attr)) ++interference;
  }
  const double pitch = anode_pitch(scene);
  const bool dense = pitch > 0.0 && pitch < tough_pitch_threshold;
  if (a.contains(Attribute::SI) || a.contains(Attribute::A) || interference >= 3 || dense) return Split::Tough;
  if (interference >= 1) return Split::Difficult;
  return Split::Regular;
}

}  // namespace pbd::synth
