// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/nn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "pbd/error.hpp"

namespace pbd::nn {

namespace {
std::atomic<bool> g_check_finite{false};
}

int Shape::operator[](int dim) const {
  switch (dim) {
    case 0: return n;
    case 1: return c;
    case 2: return h;
    case 3: return w;
    default: throw ContractError("Shape index out of range");
  }
}

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<detail::TensorImpl>()) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw DimensionError("negative tensor extent " + shape.str());
  }
  impl_->shape = shape;
  impl_->data.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : impl_(std::make_shared<detail::TensorImpl>()) {
  if (values.size() != shape.numel()) {
    throw DimensionError("tensor of shape " + shape.str() + " cannot hold " +
                         std::to_string(values.size()) + " values");
  }
  impl_->shape = shape;
  impl_->data = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1, 1, 1, 1}, value); }

const Shape& Tensor::shape() const {
  static const Shape kEmpty{};
  return impl_ ? impl_->shape : kEmpty;
}

std::span<const double> Tensor::data() const {
  if (!impl_) return {};
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!impl_) return {};
  if (!impl_->leaf) throw ContractError("only leaf tensors may be mutated");
  return impl_->data;
}

Tensor& Tensor::set_requires_grad(bool on) {
  if (!impl_) throw ContractError("set_requires_grad on an undefined tensor");
  if (!impl_->leaf) throw ContractError("set_requires_grad is only valid on leaves");
  impl_->requires_grad = on;
  if (on) {
    impl_->grad.assign(impl_->data.size(), 0.0);
  } else {
    impl_->grad.clear();
  }
  return *this;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
bool Tensor::is_leaf() const { return !impl_ || impl_->leaf; }

bool Tensor::has_grad() const { return impl_ && impl_->grad.size() == impl_->data.size() && impl_->requires_grad; }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) return {};
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() const {
  if (!impl_ || !impl_->requires_grad) throw ContractError("tensor does not require grad");
  if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_ && impl_->requires_grad) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape().str());
  return impl_->data[0];
}

std::size_t Tensor::offset(int n, int c, int h, int w) const {
  const Shape& s = shape();
  return ((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w;
}

double Tensor::at(int n, int c, int h, int w) const { return impl_->data[offset(n, c, h, w)]; }

Tensor Tensor::clone() const {
  if (!impl_) return {};
  return Tensor(impl_->shape, impl_->data);
}

void set_check_finite(bool enabled) { g_check_finite = enabled; }
bool check_finite_enabled() { return g_check_finite; }

void assert_finite(const Tensor& t, const char* where) {
  auto values = t.data();
  auto bad = std::find_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); });
  if (bad != values.end()) {
    throw NumericError(std::string("non-finite value in output of ") + where + " at index " +
                       std::to_string(bad - values.begin()));
  }
}

}  // namespace pbd::nn
