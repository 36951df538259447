// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pbd/nn/tensor.hpp"

namespace pbd::nn {

/// Named trainable tensor. Names are unique within a ParameterStore.
struct Parameter {
  std::string name;
  Tensor tensor;
};

/// Ordered collection of parameters; insertion order is the serialization order.
class ParameterStore {
 public:
  /// Registers a new leaf of `shape` and returns its handle.
  Tensor add(const std::string& name, Shape shape);

  const Parameter* find(const std::string& name) const;
  Parameter* find(const std::string& name);

  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }
  std::size_t count() const;  // total scalar parameters

  void zero_grad();

 private:
  std::vector<Parameter> items_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParameterStore& params, AdamOptions opts);

  /// One update using the current grads; `lr` overrides the base rate.
  void step(double lr);
  long steps() const { return t_; }

 private:
  ParameterStore& params_;
  AdamOptions opts_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

/// Step decay: lr * rate^floor(epoch / step_size).
double step_decay_lr(double base_lr, int epoch, int step_size, double rate);

}  // namespace pbd::nn
