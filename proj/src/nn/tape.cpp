// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/nn/tape.hpp"

#include <algorithm>

#include "pbd/error.hpp"

namespace pbd::nn {

namespace {
thread_local Tape* t_active = nullptr;
}

Tape::Scope::Scope(Tape& tape) : previous_(t_active) { t_active = &tape; }
Tape::Scope::~Scope() { t_active = previous_; }

Tape* Tape::active() { return t_active; }

bool Tape::tracking(std::span<const Tensor> inputs) {
  if (t_active == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

Tensor Tape::new_result(Shape shape, std::vector<double> values, bool track) {
  Tensor out(shape, std::move(values));
  out.impl_->leaf = false;
  out.impl_->requires_grad = track;
  return out;
}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, const Tensor& output, BackwardFn backward) {
  if (check_finite_enabled()) assert_finite(output, op.data());
  if (!output.requires_grad() || t_active == nullptr) return;
  t_active->records_.push_back(Record{op, std::move(inputs), output, std::move(backward)});
}

void backward(const Tensor& loss, Tape& tape) {
  if (!loss.defined() || loss.shape() != Shape{1, 1, 1, 1}) {
    throw ContractError("backward requires a scalar (1x1x1x1) loss, got " + loss.shape().str());
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward on a loss that does not depend on any gradient target");
  }
  for (auto& rec : tape.records_) {
    auto g = rec.output.mutable_grad();
    std::fill(g.begin(), g.end(), 0.0);
  }
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (auto it = tape.records_.rbegin(); it != tape.records_.rend(); ++it) {
    it->backward();
  }
}

}  // namespace pbd::nn
