// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/model/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pbd/error.hpp"
#include "pbd/nn/tape.hpp"

namespace pbd::model {

using nn::Shape;
using nn::Tape;
using nn::Tensor;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.defined() || !b.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (!(a.shape() == b.shape())) {
    throw ContractError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

// Box mean via a summed-area table; divisor is always k*k.
void box_mean(const double* src, int h, int w, int k, double* dst) {
  const int r = k / 2;
  std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += src[y * w + x];
      sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
    }
  }
  const double inv = 1.0 / (static_cast<double>(k) * k);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r);
    const int y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r);
      const int x1 = std::min(w, x + r + 1);
      const double s = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0] + sat[y0 * (w + 1) + x0];
      dst[y * w + x] = s * inv;
    }
  }
}

struct PlaneTerms {
  double wbce;
  double wiou;
};

// BCE from logits when `logits` is true, else from probabilities.
PlaneTerms plane_terms(const double* z, const double* m, const double* w, std::size_t n, bool logits) {
  double wsum = 0.0;
  double bce = 0.0;
  double inter = 0.0;
  double uni = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double p;
    double b;
    if (logits) {
      p = 1.0 / (1.0 + std::exp(-z[i]));
      b = std::max(z[i], 0.0) - z[i] * m[i] + std::log1p(std::exp(-std::abs(z[i])));
    } else {
      p = z[i];
      const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
      b = -(m[i] * std::log(pc) + (1.0 - m[i]) * std::log(1.0 - pc));
    }
    wsum += w[i];
    bce += w[i] * b;
    inter += w[i] * p * m[i];
    uni += w[i] * (p + m[i]);
  }
  return {bce / wsum, 1.0 - (inter + 1.0) / (uni - inter + 1.0)};
}

}  // namespace

Tensor pixel_weights(const Tensor& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw ContractError("pixel_weights: kernel must be odd, got " + std::to_string(kernel));
  const Shape s = mask.shape();
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  std::vector<double> out(s.numel());
  auto m = mask.data();
  for (std::size_t p = 0; p < static_cast<std::size_t>(s.n) * s.c; ++p) {
    box_mean(m.data() + p * plane, s.h, s.w, kernel, out.data() + p * plane);
    for (std::size_t i = 0; i < plane; ++i) out[p * plane + i] = 1.0 + 5.0 * std::abs(out[p * plane + i] - m[p * plane + i]);
  }
  return Tensor(s, std::move(out));
}

double structure_loss_value(const Tensor& probs, const Tensor& mask, int kernel) {
  require_same_shape(probs, mask, "structure_loss");
  const Tensor w = pixel_weights(mask, kernel);
  const Shape s = probs.shape();
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  double total = 0.0;
  for (std::size_t p = 0; p < planes; ++p) {
    const auto t = plane_terms(probs.data().data() + p * plane, mask.data().data() + p * plane,
                               w.data().data() + p * plane, plane, false);
    total += t.wbce + t.wiou;
  }
  return total / static_cast<double>(planes);
}

Tensor structure_loss(const Tensor& logits, const Tensor& mask, int kernel) {
  require_same_shape(logits, mask, "structure_loss");
  const Tensor weights = pixel_weights(mask, kernel);
  const Shape s = logits.shape();
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  const double* z = logits.data().data();
  const double* m = mask.data().data();
  const double* w = weights.data().data();
  double total = 0.0;
  for (std::size_t p = 0; p < planes; ++p) {
    const auto t = plane_terms(z + p * plane, m + p * plane, w + p * plane, plane, true);
    total += t.wbce + t.wiou;
  }
  const bool track = Tape::tracking({logits});
  Tensor result = Tape::new_result(Shape{1, 1, 1, 1}, {total / static_cast<double>(planes)}, track);
  if (track) {
    Tape::record("structure_loss", {logits}, result, [logits, mask, weights, result, plane, planes]() {
      const double g = result.grad()[0] / static_cast<double>(planes);
      const double* z = logits.data().data();
      const double* m = mask.data().data();
      const double* w = weights.data().data();
      auto gz = logits.mutable_grad();
      std::vector<double> p(plane);
      for (std::size_t k = 0; k < planes; ++k) {
        const std::size_t base = k * plane;
        double wsum = 0.0;
        double inter = 0.0;
        double uni = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          p[i] = 1.0 / (1.0 + std::exp(-z[base + i]));
          wsum += w[base + i];
          inter += w[base + i] * p[i] * m[base + i];
          uni += w[base + i] * (p[i] + m[base + i]);
        }
        const double d = uni - inter + 1.0;
        for (std::size_t i = 0; i < plane; ++i) {
          const double wi = w[base + i];
          const double mi = m[base + i];
          const double dbce = wi * (p[i] - mi) / wsum;
          const double diou_dp = -wi * (mi * d - (inter + 1.0) * (1.0 - mi)) / (d * d);
          gz[base + i] += g * (dbce + diou_dp * p[i] * (1.0 - p[i]));
        }
      }
    });
  }
  return result;
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "l1_loss");
  auto a = pred.data();
  auto b = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  const double n = static_cast<double>(a.size());
  const bool track = Tape::tracking({pred});
  Tensor result = Tape::new_result(Shape{1, 1, 1, 1}, {acc / n}, track);
  if (track) {
    Tape::record("l1_loss", {pred}, result, [pred, target, result, n]() {
      const double g = result.grad()[0] / n;
      auto a = pred.data();
      auto b = target.data();
      auto ga = pred.mutable_grad();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        ga[i] += g * static_cast<double>((d > 0) - (d < 0));
      }
    });
  }
  return result;
}

}  // namespace pbd::model
