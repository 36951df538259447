// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pbd/nn/tape.hpp"
#include "pbd/nn/tensor.hpp"

namespace pbd::nn {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

/// Cross-correlation of `input` (N, Cin, H, W) with `kernel` (Cout, Cin, kh, kw).
Tensor conv2d(const Tensor& input, const Tensor& kernel, Conv2dOptions opts = {});

/// Output extent along one spatial axis.
int conv_output_size(int in, int kernel, int stride, int padding, int dilation);

enum class Elementwise { Relu, Sigmoid, Add, Mul };

/// relu/sigmoid take `a` only; add/mul broadcast any size-1 dimension.
Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b = {});

inline Tensor relu(const Tensor& x) { return elementwise(Elementwise::Relu, x); }
inline Tensor sigmoid(const Tensor& x) { return elementwise(Elementwise::Sigmoid, x); }
inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::Add, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::Mul, a, b); }

/// Shape produced by broadcasting `a` against `b`; throws DimensionError.
Shape broadcast_shape(const Shape& a, const Shape& b);

Tensor scale(const Tensor& x, double factor);

/// Softmax over the channel axis of an (N, C, 1, 1) tensor.
Tensor softmax_channels(const Tensor& x);

/// (N, C, H, W) -> (N, C, 1, 1) spatial mean.
Tensor global_avg_pool(const Tensor& x);

enum class Resample { BilinearUp, AvgDown };

/// Separable linear resampling. BilinearUp follows the align-corners-false
/// convention; AvgDown is area-weighted (block mean when sizes divide).
Tensor resample(const Tensor& x, int target_h, int target_w, Resample mode);

Tensor concat_channels(const std::vector<Tensor>& xs);

/// Sum of all elements as a 1x1x1x1 tensor.
Tensor sum(const Tensor& x);

/// Same values as a fresh leaf: nothing upstream receives gradient through it.
Tensor detach(const Tensor& x);

/// Channel slice [begin, begin + count).
Tensor slice_channels(const Tensor& x, int begin, int count);

/// Resampling weights, rows = output positions; exposed for tests.
std::vector<double> resample_weights(int in, int out, Resample mode);

}  // namespace pbd::nn
