// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pbd/nn/tensor.hpp"

namespace pbd::model {

/// Boundary-emphasis weights 1 + 5 |avgpool_k(mask) - mask| (stride 1,
/// zero padding k/2, padded cells counted in the mean). Not differentiable.
nn::Tensor pixel_weights(const nn::Tensor& mask, int kernel);

/// Weighted BCE + weighted IoU of sigmoid(logits) against a binary mask,
/// averaged over batch and channels. Gradient flows to `logits` only.
nn::Tensor structure_loss(const nn::Tensor& logits, const nn::Tensor& mask, int kernel);

/// Same value computed from probabilities; used by tests as a second route.
double structure_loss_value(const nn::Tensor& probs, const nn::Tensor& mask, int kernel);

/// Mean |pred - target| over all elements.
nn::Tensor l1_loss(const nn::Tensor& pred, const nn::Tensor& target);

}  // namespace pbd::model
