// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/nn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "pbd/error.hpp"

namespace pbd::nn {

Tensor ParameterStore::add(const std::string& name, Shape shape) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name: " + name);
  Tensor t(shape);
  t.set_requires_grad(true);
  items_.push_back(Parameter{name, std::move(t)});
  return items_.back().tensor;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const Parameter& p) { return p.name == name; });
  return it == items_.end() ? nullptr : &*it;
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const Parameter& p) { return p.name == name; });
  return it == items_.end() ? nullptr : &*it;
}

std::size_t ParameterStore::count() const {
  std::size_t total = 0;
  for (const auto& p : items_) total += p.tensor.numel();
  return total;
}

void ParameterStore::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

Adam::Adam(ParameterStore& params, AdamOptions opts) : params_(params), opts_(opts) {
  for (const auto& p : params_.items()) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  auto& items = params_.items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto values = items[k].tensor.mutable_data();
    auto grads = items[k].tensor.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

double step_decay_lr(double base_lr, int epoch, int step_size, double rate) {
  if (step_size < 1) return base_lr;
  return base_lr * std::pow(rate, static_cast<double>(epoch / step_size));
}

}  // namespace pbd::nn
