// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/corners/corners.hpp"

#include <algorithm>
#include <cmath>

#include "pbd/error.hpp"

namespace pbd::corners {

using post::PointD;

FloatImage to_float(const GrayImage& image) {
  FloatImage out(image.height, image.width);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out.pixels[i] = image.pixels[i];
  return out;
}

namespace {

double at_clamped(const FloatImage& img, int x, int y) {
  return img(std::clamp(x, 0, img.width - 1), std::clamp(y, 0, img.height - 1));
}

FloatImage gaussian_window(const FloatImage& img, int window) {
  if (window < 1 || window % 2 == 0) throw ContractError("corner window must be odd, got " + std::to_string(window));
  const int r = window / 2;
  const double sigma = window / 6.0;
  std::vector<double> k(window);
  double total = 0;
  for (int i = -r; i <= r; ++i) total += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= total;
  FloatImage tmp(img.height, img.width);
  FloatImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * at_clamped(img, x + i, y);
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * at_clamped(tmp, x, y + i);
      out(x, y) = acc;
    }
  }
  return out;
}

struct Tensor2 {
  FloatImage xx, xy, yy;
};

Tensor2 structure_tensor(const FloatImage& image, int window) {
  const Gradients g = sobel_gradients(image);
  Tensor2 t{FloatImage(image.height, image.width), FloatImage(image.height, image.width),
            FloatImage(image.height, image.width)};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    t.xx.pixels[i] = g.ix.pixels[i] * g.ix.pixels[i];
    t.xy.pixels[i] = g.ix.pixels[i] * g.iy.pixels[i];
    t.yy.pixels[i] = g.iy.pixels[i] * g.iy.pixels[i];
  }
  return Tensor2{gaussian_window(t.xx, window), gaussian_window(t.xy, window), gaussian_window(t.yy, window)};
}

}  // namespace

Gradients sobel_gradients(const FloatImage& image) {
  Gradients g{FloatImage(image.height, image.width), FloatImage(image.height, image.width)};
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      auto p = [&](int dx, int dy) { return at_clamped(image, x + dx, y + dy); };
      g.ix(x, y) = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      g.iy(x, y) = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
    }
  }
  return g;
}

FloatImage harris_response(const FloatImage& image, double k, int window) {
  const Tensor2 m = structure_tensor(image, window);
  FloatImage r(image.height, image.width);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) {
    const double a = m.xx.pixels[i], b = m.xy.pixels[i], c = m.yy.pixels[i];
    r.pixels[i] = a * c - b * b - k * (a + c) * (a + c);
  }
  return r;
}

FloatImage shi_tomasi_response(const FloatImage& image, int window) {
  const Tensor2 m = structure_tensor(image, window);
  FloatImage r(image.height, image.width);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) {
    const double a = m.xx.pixels[i], b = m.xy.pixels[i], c = m.yy.pixels[i];
    r.pixels[i] = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  }
  return r;
}

void apply_edge_prefilter(FloatImage& score, const FloatImage& image, double percentile) {
  if (!(percentile >= 0.0 && percentile < 1.0)) throw ContractError("edge percentile must lie in [0, 1)");
  const Gradients g = sobel_gradients(image);
  std::vector<double> mag(image.pixels.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(g.ix.pixels[i], g.iy.pixels[i]);
  if (mag.empty()) return;
  std::vector<double> sorted = mag;
  const auto nth = static_cast<std::size_t>(percentile * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(nth), sorted.end());
  const double cut = sorted[nth];
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i] <= cut) score.pixels[i] = 0.0;
  }
}

std::vector<PointD> select_peaks(const FloatImage& score, double threshold_rel, int radius) {
  double best = 0;
  for (double v : score.pixels) best = std::max(best, v);
  if (best <= 0) return {};
  const double thr = threshold_rel * best;
  struct Cand {
    double s;
    int x, y;
  };
  std::vector<Cand> cands;
  for (int y = 0; y < score.height; ++y) {
    for (int x = 0; x < score.width; ++x) {
      const double v = score(x, y);
      if (v <= thr) continue;
      bool peak = true;
      for (int dy = -1; dy <= 1 && peak; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx || dy) && score.contains(x + dx, y + dy) && score(x + dx, y + dy) > v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) cands.push_back({v, x, y});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.s != b.s) return a.s > b.s;
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  std::vector<PointD> kept;
  const double r2 = static_cast<double>(radius) * radius;
  for (const auto& c : cands) {
    bool far = true;
    for (const auto& k : kept) {
      const double dx = k.x - c.x, dy = k.y - c.y;
      if (dx * dx + dy * dy <= r2) {
        far = false;
        break;
      }
    }
    if (far) kept.push_back(PointD{static_cast<double>(c.x), static_cast<double>(c.y)});
  }
  post::sort_points(kept);
  return kept;
}

std::vector<PointD> harris(const FloatImage& image, const CornerOptions& opts) {
  FloatImage r = harris_response(image, opts.k, opts.window);
  if (opts.edge_prefilter) apply_edge_prefilter(r, image, opts.edge_percentile);
  return select_peaks(r, opts.threshold_rel, opts.nms_radius);
}

std::vector<PointD> shi_tomasi(const FloatImage& image, const CornerOptions& opts) {
  FloatImage r = shi_tomasi_response(image, opts.window);
  if (opts.edge_prefilter) apply_edge_prefilter(r, image, opts.edge_percentile);
  return select_peaks(r, opts.threshold_rel, opts.nms_radius);
}

std::vector<RefinedCorner> subpixel_refine(const FloatImage& image, const std::vector<PointD>& corners,
                                           const RefineOptions& opts) {
  const Gradients g = sobel_gradients(image);
  const int hw = opts.half_window;
  auto inside = [&](const PointD& p) {
    const int x = static_cast<int>(std::lround(p.x));
    const int y = static_cast<int>(std::lround(p.y));
    return x - hw >= 1 && y - hw >= 1 && x + hw <= image.width - 2 && y + hw <= image.height - 2;
  };
  std::vector<RefinedCorner> out;
  for (const auto& start : corners) {
    RefinedCorner rc{start, false};
    if (!inside(start)) {
      out.push_back(rc);
      continue;
    }
    PointD p = start;
    bool ok = true;
    for (int it = 0; it < opts.max_iterations; ++it) {
      const int cx = static_cast<int>(std::lround(p.x));
      const int cy = static_cast<int>(std::lround(p.y));
      double a = 0, b = 0, c = 0, bx = 0, by = 0;
      for (int y = cy - hw; y <= cy + hw; ++y) {
        for (int x = cx - hw; x <= cx + hw; ++x) {
          const double gx = g.ix(x, y), gy = g.iy(x, y);
          a += gx * gx;
          b += gx * gy;
          c += gy * gy;
          bx += gx * gx * x + gx * gy * y;
          by += gx * gy * x + gy * gy * y;
        }
      }
      const double det = a * c - b * b;
      if (!(std::abs(det) > 1e-12 * std::max(1.0, (a + c) * (a + c)))) {
        ok = false;
        break;
      }
      const PointD q{(c * bx - b * by) / det, (a * by - b * bx) / det};
      const double move = std::hypot(q.x - p.x, q.y - p.y);
      p = q;
      if (!inside(p)) {
        ok = false;
        break;
      }
      if (move < opts.epsilon) break;
    }
    if (ok) rc = RefinedCorner{p, true};
    out.push_back(rc);
  }
  return out;
}

post::PredictionRecord corners_to_record(const std::vector<PointD>& corners, const std::string& id) {
  post::PredictionRecord r;
  r.id = id;
  r.anode = corners;
  post::sort_points(r.anode);
  r.cathode = r.anode;
  r.n_anode = r.n_cathode = static_cast<int>(r.anode.size());
  return r;
}

}  // namespace pbd::corners
