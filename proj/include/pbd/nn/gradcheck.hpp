// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "pbd/nn/tensor.hpp"

namespace pbd::nn {

/// Largest relative disagreement between the reverse-mode gradient of a
/// scalar function and its central-difference estimate:
///
///   max_i |analytic_i - numeric_i| / max(1, |analytic_i|, |numeric_i|)
///
/// `x` must be a leaf; its requires_grad flag and grad buffer are restored.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps = 1e-5);

/// Same measure over several leaves that `f` closes over (e.g. parameters).
double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves, double eps = 1e-5);

}  // namespace pbd::nn
