// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>

#include "doctest.h"
#include "pbd/corners/corners.hpp"
#include "pbd/error.hpp"
#include "pbd/random.hpp"

using namespace pbd;
using namespace pbd::corners;
using post::PointD;

namespace {

// Bright square covering pixels [x0, x0 + side) x [y0, y0 + side).
FloatImage square(int size, int x0, int y0, int side) {
  FloatImage img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      img(x, y) = (x >= x0 && x < x0 + side && y >= y0 && y < y0 + side) ? 200.0 : 20.0;
    }
  }
  return img;
}

// Area-sampled quadrant x > cx, y > cy; pixel (x, y) covers [x - 0.5, x + 0.5].
FloatImage quadrant(int size, double cx, double cy) {
  FloatImage img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double fx = std::clamp(x + 0.5 - cx, 0.0, 1.0);
      const double fy = std::clamp(y + 0.5 - cy, 0.0, 1.0);
      img(x, y) = 20.0 + 180.0 * fx * fy;
    }
  }
  return img;
}

double nearest(const std::vector<PointD>& pts, PointD q) {
  double best = 1e300;
  for (const auto& p : pts) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
  return best;
}

using Detector = std::function<std::vector<PointD>(const FloatImage&, const CornerOptions&)>;

const std::vector<std::pair<const char*, Detector>> kDetectors = {
    {"harris", [](const FloatImage& i, const CornerOptions& o) { return harris(i, o); }},
    {"shi-tomasi", [](const FloatImage& i, const CornerOptions& o) { return shi_tomasi(i, o); }},
};

}  // namespace

TEST_CASE("square has four corners") {
  const FloatImage img = square(48, 10, 10, 20);
  for (const auto& [name, detect] : kDetectors) {
    CAPTURE(name);
    const auto pts = detect(img, {});
    CHECK(pts.size() == 4);
    for (PointD c : {PointD{9.5, 9.5}, PointD{29.5, 9.5}, PointD{9.5, 29.5}, PointD{29.5, 29.5}}) {
      CHECK(nearest(pts, c) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("flat and straight-edge images have no corners") {
  FloatImage flat(32, 32);
  for (auto& v : flat.pixels) v = 90.0;
  FloatImage edge(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) edge(x, y) = x < 16 ? 30.0 : 180.0;
  }
  for (const auto& [name, detect] : kDetectors) {
    CAPTURE(name);
    CHECK(detect(flat, {}).empty());
    CHECK(detect(edge, {}).empty());
    CornerOptions raw;
    raw.edge_prefilter = false;
    CHECK(detect(edge, raw).empty());
  }
}

TEST_CASE("translation equivariance") {
  const FloatImage a = square(56, 12, 12, 18);
  const FloatImage b = square(56, 15, 14, 18);
  for (const auto& [name, detect] : kDetectors) {
    CAPTURE(name);
    const auto pa = detect(a, {});
    const auto pb = detect(b, {});
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pb[i].x == pa[i].x + 3);
      CHECK(pb[i].y == pa[i].y + 2);
    }
  }
}

TEST_CASE("peaks respect the suppression radius") {
  Rng rng(11);
  FloatImage img(40, 40);
  for (auto& v : img.pixels) v = rng.uniform(0, 255);
  for (int radius : {1, 3, 6}) {
    CornerOptions o;
    o.nms_radius = radius;
    o.edge_prefilter = false;
    for (const auto& [name, detect] : kDetectors) {
      const auto pts = detect(img, o);
      CHECK_FALSE(pts.empty());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
          CHECK(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) > radius);
        }
      }
    }
  }
}

TEST_CASE("responses match closed form on a constant tensor") {
  // A linear ramp has constant gradients, so both scores follow from Ix, Iy alone.
  FloatImage ramp(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) ramp(x, y) = 2.0 * x + 1.0 * y;
  }
  const double gx = 8 * 2.0, gy = 8 * 1.0;  // Sobel gain is 8 on a unit ramp
  const double a = gx * gx, b = gx * gy, c = gy * gy;
  const FloatImage h = harris_response(ramp, 0.04, 5);
  const FloatImage s = shi_tomasi_response(ramp, 5);
  CHECK(h(8, 8) == doctest::Approx(a * c - b * b - 0.04 * (a + c) * (a + c)));
  CHECK(s(8, 8) == doctest::Approx(0.0).epsilon(1e-9).scale(a + c));
  CHECK_THROWS_AS(harris_response(ramp, 0.04, 4), ContractError);
}

TEST_CASE("subpixel refinement") {
  const FloatImage img = quadrant(24, 10.5, 7.25);
  const auto r = subpixel_refine(img, {{11, 8}});
  REQUIRE(r.size() == 1);
  CHECK(r[0].refined);
  CHECK(std::abs(r[0].p.x - 10.5) <= 0.25);
  CHECK(std::abs(r[0].p.y - 7.25) <= 0.25);

  // Refining a refined corner stays put.
  const auto again = subpixel_refine(img, {r[0].p});
  CHECK(std::hypot(again[0].p.x - r[0].p.x, again[0].p.y - r[0].p.y) < 1e-2);

  // Too close to the border: returned untouched.
  const auto border = subpixel_refine(img, {{2, 3}});
  CHECK_FALSE(border[0].refined);
  CHECK(border[0].p == PointD{2, 3});

  // Flat neighbourhood: singular system.
  FloatImage flat(24, 24);
  const auto singular = subpixel_refine(flat, {{12, 12}});
  CHECK_FALSE(singular[0].refined);
  CHECK(singular[0].p == PointD{12, 12});
}

TEST_CASE("corners feed both polarities") {
  const auto rec = corners_to_record({{5, 2}, {1, 9}}, "x");
  CHECK(rec.id == "x");
  CHECK(rec.n_anode == 2);
  CHECK(rec.n_cathode == 2);
  CHECK(rec.anode == rec.cathode);
  CHECK(rec.anode.front() == PointD{1, 9});
}
