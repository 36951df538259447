// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "pbd/error.hpp"

namespace pbd::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  int cin, h, w, kh, kw, ho, wo, stride, pad, dil;
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

void im2col(const double* x, const ConvGeometry& g, double* cols) {
  const int p = g.ho * g.wo;
  for (int c = 0; c < g.cin; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        double* row = cols + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * p;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ki * g.dil;
          double* dst = row + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kj * g.dil;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* x) {
  const int p = g.ho * g.wo;
  for (int c = 0; c < g.cin; ++c) {
    double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * p;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ki * g.dil;
          if (iy < 0 || iy >= g.h) continue;
          const double* src = row + static_cast<std::size_t>(oy) * g.wo;
          double* dst = xc + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kj * g.dil;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

std::size_t stride_of(const Shape& s, int dim) {
  switch (dim) {
    case 0: return static_cast<std::size_t>(s.c) * s.h * s.w;
    case 1: return static_cast<std::size_t>(s.h) * s.w;
    case 2: return static_cast<std::size_t>(s.w);
    default: return 1;
  }
}

// Strides of `in` when iterated over `out`; broadcast dimensions get 0.
std::array<std::size_t, 4> broadcast_strides(const Shape& in, const Shape& out) {
  std::array<std::size_t, 4> st{};
  for (int d = 0; d < 4; ++d) st[d] = (in[d] == 1 && out[d] != 1) ? 0 : stride_of(in, d);
  return st;
}

template <class Fn>
void for_each_broadcast(const Shape& out, const std::array<std::size_t, 4>& sa,
                        const std::array<std::size_t, 4>& sb, Fn&& fn) {
  std::size_t o = 0;
  for (int n = 0; n < out.n; ++n) {
    for (int c = 0; c < out.c; ++c) {
      for (int h = 0; h < out.h; ++h) {
        const std::size_t ba = n * sa[0] + c * sa[1] + h * sa[2];
        const std::size_t bb = n * sb[0] + c * sb[1] + h * sb[2];
        for (int w = 0; w < out.w; ++w, ++o) fn(o, ba + w * sa[3], bb + w * sb[3]);
      }
    }
  }
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined input tensor");
}

}  // namespace

int conv_output_size(int in, int kernel, int stride, int padding, int dilation) {
  return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, Conv2dOptions opts) {
  require_defined(input, "conv2d");
  require_defined(kernel, "conv2d");
  if (opts.stride < 1 || opts.dilation < 1 || opts.padding < 0) {
    throw ContractError("conv2d: stride and dilation must be >= 1 and padding >= 0");
  }
  const Shape xs = input.shape();
  const Shape ks = kernel.shape();
  if (ks.c != xs.c) {
    throw DimensionError("conv2d: input " + xs.str() + " does not match kernel " + ks.str());
  }
  const int numer_h = xs.h + 2 * opts.padding - opts.dilation * (ks.h - 1) - 1;
  const int numer_w = xs.w + 2 * opts.padding - opts.dilation * (ks.w - 1) - 1;
  if (numer_h < 0 || numer_w < 0) {
    throw DimensionError("conv2d: kernel " + ks.str() + " larger than padded input " + xs.str());
  }
  ConvGeometry g{xs.c, xs.h, xs.w, ks.h, ks.w, numer_h / opts.stride + 1, numer_w / opts.stride + 1,
                 opts.stride, opts.padding, opts.dilation};
  const int cout = ks.n;
  const int kdim = g.cin * g.kh * g.kw;
  const int p = g.ho * g.wo;
  const Shape os{xs.n, cout, g.ho, g.wo};

  std::vector<double> out(os.numel());
  std::vector<double> cols(g.pointwise() ? 0 : static_cast<std::size_t>(kdim) * p);
  ConstMatrixMap km(kernel.data().data(), cout, kdim);
  const std::size_t in_stride = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
  const std::size_t out_stride = static_cast<std::size_t>(cout) * p;
  for (int n = 0; n < xs.n; ++n) {
    const double* xn = input.data().data() + n * in_stride;
    const double* cptr = xn;
    if (!g.pointwise()) {
      im2col(xn, g, cols.data());
      cptr = cols.data();
    }
    MatrixMap om(out.data() + n * out_stride, cout, p);
    om.noalias() = km * ConstMatrixMap(cptr, kdim, p);
  }

  const bool track = Tape::tracking({input, kernel});
  Tensor result = Tape::new_result(os, std::move(out), track);
  if (track) {
    Tape::record("conv2d", {input, kernel}, result, [input, kernel, result, g, cout, kdim, p, in_stride, out_stride]() mutable {
      const double* gout = result.grad().data();
      std::vector<double> cols(g.pointwise() ? 0 : static_cast<std::size_t>(kdim) * p);
      std::vector<double> dcols(input.requires_grad() ? static_cast<std::size_t>(kdim) * p : 0);
      ConstMatrixMap km(kernel.data().data(), cout, kdim);
      for (int n = 0; n < input.shape().n; ++n) {
        ConstMatrixMap go(gout + n * out_stride, cout, p);
        const double* xn = input.data().data() + n * in_stride;
        if (kernel.requires_grad()) {
          const double* cptr = xn;
          if (!g.pointwise()) {
            im2col(xn, g, cols.data());
            cptr = cols.data();
          }
          MatrixMap dk(kernel.mutable_grad().data(), cout, kdim);
          dk.noalias() += go * ConstMatrixMap(cptr, kdim, p).transpose();
        }
        if (input.requires_grad()) {
          double* dx = input.mutable_grad().data() + n * in_stride;
          if (g.pointwise()) {
            MatrixMap(dx, kdim, p).noalias() += km.transpose() * go;
          } else {
            MatrixMap(dcols.data(), kdim, p).noalias() = km.transpose() * go;
            col2im_add(dcols.data(), g, dx);
          }
        }
      }
    });
  }
  return result;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  Shape out;
  int* dims[4] = {&out.n, &out.c, &out.h, &out.w};
  for (int d = 0; d < 4; ++d) {
    const int da = a[d];
    const int db = b[d];
    if (da == db || db == 1) {
      *dims[d] = da;
    } else if (da == 1) {
      *dims[d] = db;
    } else {
      throw DimensionError("cannot broadcast " + a.str() + " with " + b.str());
    }
  }
  return out;
}

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b) {
  require_defined(a, "elementwise");
  if (kind == Elementwise::Relu || kind == Elementwise::Sigmoid) {
    auto x = a.data();
    std::vector<double> out(x.size());
    if (kind == Elementwise::Relu) {
      std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
    } else {
      std::transform(x.begin(), x.end(), out.begin(), [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
    }
    const bool track = Tape::tracking({a});
    Tensor result = Tape::new_result(a.shape(), std::move(out), track);
    if (track) {
      const bool is_relu = kind == Elementwise::Relu;
      Tape::record(is_relu ? "relu" : "sigmoid", {a}, result, [a, result, is_relu]() mutable {
        auto g = result.grad();
        auto y = result.data();
        auto ga = a.mutable_grad();
        if (is_relu) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] > 0.0 ? g[i] : 0.0;
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        }
      });
    }
    return result;
  }

  require_defined(b, "elementwise");
  const Shape os = broadcast_shape(a.shape(), b.shape());
  const bool is_add = kind == Elementwise::Add;
  std::vector<double> out(os.numel());
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  const bool same = a.shape() == b.shape();
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = is_add ? pa[i] + pb[i] : pa[i] * pb[i];
  } else {
    const auto sa = broadcast_strides(a.shape(), os);
    const auto sb = broadcast_strides(b.shape(), os);
    for_each_broadcast(os, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
      out[o] = is_add ? pa[ia] + pb[ib] : pa[ia] * pb[ib];
    });
  }

  const bool track = Tape::tracking({a, b});
  Tensor result = Tape::new_result(os, std::move(out), track);
  if (track) {
    Tape::record(is_add ? "add" : "mul", {a, b}, result, [a, b, result, is_add, same, os]() mutable {
      const double* g = result.grad().data();
      const bool ga_on = a.requires_grad();
      const bool gb_on = b.requires_grad();
      double* ga = ga_on ? a.mutable_grad().data() : nullptr;
      double* gb = gb_on ? b.mutable_grad().data() : nullptr;
      const double* pa = a.data().data();
      const double* pb = b.data().data();
      if (same) {
        for (std::size_t i = 0; i < os.numel(); ++i) {
          if (ga_on) ga[i] += is_add ? g[i] : g[i] * pb[i];
          if (gb_on) gb[i] += is_add ? g[i] : g[i] * pa[i];
        }
        return;
      }
      const auto sa = broadcast_strides(a.shape(), os);
      const auto sb = broadcast_strides(b.shape(), os);
      for_each_broadcast(os, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
        if (ga_on) ga[ia] += is_add ? g[o] : g[o] * pb[ib];
        if (gb_on) gb[ib] += is_add ? g[o] : g[o] * pa[ia];
      });
    });
  }
  return result;
}

Tensor scale(const Tensor& x, double factor) {
  require_defined(x, "scale");
  auto v = x.data();
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [factor](double e) { return e * factor; });
  const bool track = Tape::tracking({x});
  Tensor result = Tape::new_result(x.shape(), std::move(out), track);
  if (track) {
    Tape::record("scale", {x}, result, [x, result, factor]() mutable {
      auto g = result.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
    });
  }
  return result;
}

Tensor softmax_channels(const Tensor& x) {
  require_defined(x, "softmax_channels");
  const Shape s = x.shape();
  if (s.h != 1 || s.w != 1) {
    throw DimensionError("softmax_channels expects spatial size 1x1, got " + s.str());
  }
  auto v = x.data();
  std::vector<double> out(v.size());
  for (int n = 0; n < s.n; ++n) {
    const double* in = v.data() + static_cast<std::size_t>(n) * s.c;
    double* o = out.data() + static_cast<std::size_t>(n) * s.c;
    const double mx = *std::max_element(in, in + s.c);
    double total = 0.0;
    for (int c = 0; c < s.c; ++c) {
      o[c] = std::exp(in[c] - mx);
      total += o[c];
    }
    for (int c = 0; c < s.c; ++c) o[c] /= total;
  }
  const bool track = Tape::tracking({x});
  Tensor result = Tape::new_result(s, std::move(out), track);
  if (track) {
    Tape::record("softmax_channels", {x}, result, [x, result, s]() mutable {
      auto g = result.grad();
      auto y = result.data();
      auto gx = x.mutable_grad();
      for (int n = 0; n < s.n; ++n) {
        const std::size_t base = static_cast<std::size_t>(n) * s.c;
        double dot = 0.0;
        for (int c = 0; c < s.c; ++c) dot += g[base + c] * y[base + c];
        for (int c = 0; c < s.c; ++c) gx[base + c] += y[base + c] * (g[base + c] - dot);
      }
    });
  }
  return result;
}

Tensor global_avg_pool(const Tensor& x) {
  require_defined(x, "global_avg_pool");
  const Shape s = x.shape();
  if (s.h < 1 || s.w < 1) throw DimensionError("global_avg_pool on empty spatial extent " + s.str());
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const Shape os{s.n, s.c, 1, 1};
  std::vector<double> out(os.numel());
  auto v = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < plane; ++j) acc += v[i * plane + j];
    out[i] = acc / static_cast<double>(plane);
  }
  const bool track = Tape::tracking({x});
  Tensor result = Tape::new_result(os, std::move(out), track);
  if (track) {
    Tape::record("global_avg_pool", {x}, result, [x, result, plane]() mutable {
      auto g = result.grad();
      auto gx = x.mutable_grad();
      const double inv = 1.0 / static_cast<double>(plane);
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < plane; ++j) gx[i * plane + j] += g[i] * inv;
      }
    });
  }
  return result;
}

std::vector<double> resample_weights(int in, int out, Resample mode) {
  std::vector<double> w(static_cast<std::size_t>(out) * in, 0.0);
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double* row = w.data() + static_cast<std::size_t>(o) * in;
    if (mode == Resample::BilinearUp) {
      double src = (o + 0.5) * ratio - 0.5;
      if (src < 0.0) src = 0.0;
      int i0 = std::min(static_cast<int>(std::floor(src)), in - 1);
      const int i1 = std::min(i0 + 1, in - 1);
      const double lambda = src - i0;
      row[i0] += 1.0 - lambda;
      row[i1] += lambda;
    } else {
      const double start = o * ratio;
      const double end = (o + 1) * ratio;
      const int first = static_cast<int>(std::floor(start));
      const int last = std::min(static_cast<int>(std::ceil(end)), in);
      for (int i = first; i < last; ++i) {
        const double overlap = std::min(end, i + 1.0) - std::max(start, static_cast<double>(i));
        if (overlap > 0.0) row[i] += overlap / ratio;
      }
    }
  }
  return w;
}

Tensor resample(const Tensor& x, int target_h, int target_w, Resample mode) {
  require_defined(x, "resample");
  if (target_h < 1 || target_w < 1) throw ContractError("resample: target size must be >= 1");
  const Shape s = x.shape();
  const Shape os{s.n, s.c, target_h, target_w};
  auto wy = std::make_shared<std::vector<double>>(resample_weights(s.h, target_h, mode));
  auto wx = std::make_shared<std::vector<double>>(resample_weights(s.w, target_w, mode));
  ConstMatrixMap ry(wy->data(), target_h, s.h);
  ConstMatrixMap rx(wx->data(), target_w, s.w);
  std::vector<double> out(os.numel());
  const std::size_t in_plane = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t out_plane = static_cast<std::size_t>(target_h) * target_w;
  RowMatrix tmp;
  for (std::size_t p = 0; p < static_cast<std::size_t>(s.n) * s.c; ++p) {
    ConstMatrixMap xm(x.data().data() + p * in_plane, s.h, s.w);
    tmp.noalias() = ry * xm;
    MatrixMap(out.data() + p * out_plane, target_h, target_w).noalias() = tmp * rx.transpose();
  }
  const bool track = Tape::tracking({x});
  Tensor result = Tape::new_result(os, std::move(out), track);
  if (track) {
    Tape::record("resample", {x}, result, [x, result, wy, wx, s, target_h, target_w, in_plane, out_plane]() mutable {
      ConstMatrixMap ry(wy->data(), target_h, s.h);
      ConstMatrixMap rx(wx->data(), target_w, s.w);
      const double* g = result.grad().data();
      double* gx = x.mutable_grad().data();
      RowMatrix tmp;
      for (std::size_t p = 0; p < static_cast<std::size_t>(s.n) * s.c; ++p) {
        tmp.noalias() = ry.transpose() * ConstMatrixMap(g + p * out_plane, target_h, target_w);
        MatrixMap(gx + p * in_plane, s.h, s.w).noalias() += tmp * rx;
      }
    });
  }
  return result;
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("concat_channels: no inputs");
  for (const auto& t : xs) require_defined(t, "concat_channels");
  const Shape first = xs.front().shape();
  int channels = 0;
  for (const auto& t : xs) {
    const Shape s = t.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw DimensionError("concat_channels: " + s.str() + " does not match " + first.str());
    }
    channels += s.c;
  }
  const Shape os{first.n, channels, first.h, first.w};
  const std::size_t plane = static_cast<std::size_t>(first.h) * first.w;
  std::vector<double> out(os.numel());
  int offset = 0;
  for (const auto& t : xs) {
    const int c = t.shape().c;
    for (int n = 0; n < first.n; ++n) {
      std::copy_n(t.data().data() + static_cast<std::size_t>(n) * c * plane, c * plane,
                  out.data() + (static_cast<std::size_t>(n) * channels + offset) * plane);
    }
    offset += c;
  }
  const bool track = Tape::tracking(std::span<const Tensor>(xs));
  Tensor result = Tape::new_result(os, std::move(out), track);
  if (track) {
    Tape::record("concat_channels", xs, result, [xs, result, channels, plane]() mutable {
      const double* g = result.grad().data();
      int offset = 0;
      for (auto& t : xs) {
        const int c = t.shape().c;
        if (t.requires_grad()) {
          double* gt = t.mutable_grad().data();
          for (int n = 0; n < t.shape().n; ++n) {
            const double* src = g + (static_cast<std::size_t>(n) * channels + offset) * plane;
            double* dst = gt + static_cast<std::size_t>(n) * c * plane;
            for (std::size_t i = 0; i < c * plane; ++i) dst[i] += src[i];
          }
        }
        offset += c;
      }
    });
  }
  return result;
}

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const bool track = Tape::tracking({x});
  Tensor result = Tape::new_result(Shape{1, 1, 1, 1}, {acc}, track);
  if (track) {
    Tape::record("sum", {x}, result, [x, result]() mutable {
      const double g = result.grad()[0];
      for (double& v : x.mutable_grad()) v += g;
    });
  }
  return result;
}

Tensor detach(const Tensor& x) {
  require_defined(x, "detach");
  return x.clone();
}

Tensor slice_channels(const Tensor& x, int begin, int count) {
  require_defined(x, "slice_channels");
  const Shape s = x.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw DimensionError("slice_channels [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + s.str());
  }
  const Shape os{s.n, count, s.h, s.w};
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  std::vector<double> out(os.numel());
  for (int n = 0; n < s.n; ++n) {
    std::copy_n(x.data().data() + (static_cast<std::size_t>(n) * s.c + begin) * plane, count * plane,
                out.data() + static_cast<std::size_t>(n) * count * plane);
  }
  const bool track = Tape::tracking({x});
  Tensor result = Tape::new_result(os, std::move(out), track);
  if (track) {
    Tape::record("slice_channels", {x}, result, [x, result, s, begin, count, plane]() mutable {
      const double* g = result.grad().data();
      double* gx = x.mutable_grad().data();
      for (int n = 0; n < s.n; ++n) {
        const double* src = g + static_cast<std::size_t>(n) * count * plane;
        double* dst = gx + (static_cast<std::size_t>(n) * s.c + begin) * plane;
        for (std::size_t i = 0; i < count * plane; ++i) dst[i] += src[i];
      }
    });
  }
  return result;
}

}  // namespace pbd::nn
