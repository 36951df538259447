// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "pbd/error.hpp"
#include "pbd/nn/tape.hpp"

namespace pbd::nn {

double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves, double eps) {
  std::vector<bool> had_grad;
  std::vector<std::vector<double>> saved_grad;
  for (auto& leaf : leaves) {
    if (!leaf.is_leaf()) throw ContractError("grad_check: inputs must be leaf tensors");
    had_grad.push_back(leaf.requires_grad());
    saved_grad.emplace_back(leaf.grad().begin(), leaf.grad().end());
    leaf.set_requires_grad(true);
  }

  {
    Tape tape;
    Tensor y;
    {
      Tape::Scope scope(tape);
      y = f();
    }
    backward(y, tape);
  }

  double worst = 0.0;
  for (auto& leaf : leaves) {
    const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    auto values = leaf.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + eps;
      const double plus = f().item();
      values[i] = orig - eps;
      const double minus = f().item();
      values[i] = orig;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }

  for (std::size_t k = 0; k < leaves.size(); ++k) {
    leaves[k].set_requires_grad(had_grad[k]);
    if (had_grad[k] && !saved_grad[k].empty()) {
      std::copy(saved_grad[k].begin(), saved_grad[k].end(), leaves[k].mutable_grad().begin());
    }
  }
  return worst;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps) {
  return grad_check([&f, &x]() { return f(x); }, std::vector<Tensor>{x}, eps);
}

}  // namespace pbd::nn
