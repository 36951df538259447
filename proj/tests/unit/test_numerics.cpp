// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "pbd/error.hpp"
#include "pbd/nn/gradcheck.hpp"
#include "pbd/nn/ops.hpp"
#include "pbd/nn/optim.hpp"
#include "pbd/random.hpp"

using namespace pbd;
using namespace pbd::nn;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> v(s.numel());
  for (auto& x : v) x = scale * rng.normal();
  return Tensor(s, std::move(v));
}

// Direct 7-loop convolution used as an oracle for the GEMM path.
Tensor naive_conv(const Tensor& x, const Tensor& k, Conv2dOptions o) {
  const Shape xs = x.shape(), ks = k.shape();
  const int oh = (xs.h + 2 * o.padding - o.dilation * (ks.h - 1) - 1) / o.stride + 1;
  const int ow = (xs.w + 2 * o.padding - o.dilation * (ks.w - 1) - 1) / o.stride + 1;
  Tensor out(Shape{xs.n, ks.n, oh, ow});
  auto d = out.mutable_data();
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < ks.n; ++co)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = 0;
          for (int ci = 0; ci < ks.c; ++ci)
            for (int ky = 0; ky < ks.h; ++ky)
              for (int kx = 0; kx < ks.w; ++kx) {
                const int iy = y * o.stride - o.padding + ky * o.dilation;
                const int ix = xx * o.stride - o.padding + kx * o.dilation;
                if (iy < 0 || ix < 0 || iy >= xs.h || ix >= xs.w) continue;
                acc += x.at(n, ci, iy, ix) * k.at(co, ci, ky, kx);
              }
          d[out.offset(n, co, y, xx)] = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("tensor construction and shape invariants") {
  Tensor t(Shape{2, 3, 4, 5}, 1.5);
  CHECK(t.numel() == 120);
  CHECK(t.data().size() == 120);
  CHECK_FALSE(t.requires_grad());
  t.set_requires_grad();
  CHECK(t.grad().size() == t.data().size());
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("conv2d identity kernel") {
  Tensor x(Shape{1, 1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor k(Shape{1, 1, 1, 1}, 1.0);
  Tensor y = conv2d(x, k);
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < 9; ++i) CHECK(y.data()[i] == x.data()[i]);

  // Identity for any input: 3x3 kernel with a centred delta per channel.
  Tensor xr = random_tensor(Shape{2, 3, 7, 6}, 5);
  Tensor kr(Shape{3, 3, 3, 3});
  for (int c = 0; c < 3; ++c) kr.mutable_data()[kr.offset(c, c, 1, 1)] = 1.0;
  Tensor yr = conv2d(xr, kr, {1, 1, 1});
  for (std::size_t i = 0; i < xr.numel(); ++i) CHECK(yr.data()[i] == xr.data()[i]);
}

TEST_CASE("dilated conv hand value") {
  Tensor y = conv2d(Tensor(Shape{1, 1, 5, 5}, 1.0), Tensor(Shape{1, 1, 3, 3}, 1.0), {1, 0, 2});
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.item() == 9.0);
}

TEST_CASE("conv2d matches direct evaluation") {
  for (auto o : {Conv2dOptions{1, 0, 1}, Conv2dOptions{2, 1, 1}, Conv2dOptions{1, 2, 2}, Conv2dOptions{2, 3, 3}}) {
    Tensor x = random_tensor(Shape{2, 3, 9, 8}, 11);
    Tensor k = random_tensor(Shape{4, 3, 3, 3}, 12);
    Tensor a = conv2d(x, k, o);
    Tensor b = naive_conv(x, k, o);
    REQUIRE(a.shape() == b.shape());
    CHECK(a.shape().h == conv_output_size(9, 3, o.stride, o.padding, o.dilation));
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d shape errors name both shapes") {
  Tensor x(Shape{1, 2, 5, 5});
  Tensor k(Shape{1, 3, 3, 3});
  try {
    conv2d(x, k);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(x.shape().str()) != std::string::npos);
    CHECK(msg.find(k.shape().str()) != std::string::npos);
  }
  CHECK_THROWS_AS(conv2d(x, Tensor(Shape{1, 2, 3, 3}), {0, 0, 1}), ContractError);
}

TEST_CASE("elementwise analytic values") {
  Tape tape;
  Tensor x(Shape{1, 1, 1, 1}, 0.0);
  x.set_requires_grad();
  {
    Tape::Scope s(tape);
    Tensor y = sigmoid(x);
    CHECK(y.item() == 0.5);
    backward(sum(y), tape);
  }
  CHECK(x.grad()[0] == doctest::Approx(0.25));

  Tensor r(Shape{1, 1, 1, 2}, std::vector<double>{-2, 3});
  r.set_requires_grad();
  Tape tape2;
  {
    Tape::Scope s(tape2);
    Tensor y = relu(r);
    CHECK(y.data()[0] == 0.0);
    CHECK(y.data()[1] == 3.0);
    backward(sum(y), tape2);
  }
  CHECK(r.grad()[0] == 0.0);
  CHECK(r.grad()[1] == 1.0);
}

TEST_CASE("broadcast multiply over channels") {
  Tensor a = random_tensor(Shape{1, 4, 8, 8}, 3);
  Tensor m = random_tensor(Shape{1, 1, 8, 8}, 4);
  Tensor y = mul(a, m);
  CHECK(y.shape() == a.shape());
  CHECK(y.at(0, 2, 3, 5) == doctest::Approx(a.at(0, 2, 3, 5) * m.at(0, 0, 3, 5)));
  CHECK_THROWS_AS(add(Tensor(Shape{1, 3, 4, 4}), Tensor(Shape{1, 2, 4, 4})), DimensionError);
  CHECK(broadcast_shape(Shape{4, 3, 3, 3}, Shape{1, 3, 1, 1}) == Shape{4, 3, 3, 3});
}

TEST_CASE("softmax over channels") {
  Tensor u(Shape{1, 4, 1, 1}, 2.0);
  const Tensor su = softmax_channels(u);
  for (double v : su.data()) CHECK(v == doctest::Approx(0.25));
  Tensor t(Shape{1, 2, 1, 1}, std::vector<double>{0.0, std::log(3.0)});
  Tensor s = softmax_channels(t);
  CHECK(s.data()[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s.data()[1] == doctest::Approx(0.75).epsilon(1e-14));
  Tensor r = softmax_channels(random_tensor(Shape{3, 7, 1, 1}, 9, 50.0));
  for (int n = 0; n < 3; ++n) {
    double total = 0;
    for (int c = 0; c < 7; ++c) {
      CHECK(r.at(n, c, 0, 0) >= 0.0);
      total += r.at(n, c, 0, 0);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(softmax_channels(Tensor(Shape{1, 2, 2, 1})), DimensionError);
}

TEST_CASE("global average pooling") {
  CHECK(global_avg_pool(Tensor(Shape{1, 1, 3, 5}, 4.0)).item() == doctest::Approx(4.0));
  Tensor x(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  x.set_requires_grad();
  Tape tape;
  {
    Tape::Scope s(tape);
    Tensor y = global_avg_pool(x);
    CHECK(y.item() == 2.5);
    backward(y, tape);
  }
  for (double g : x.grad()) CHECK(g == 0.25);
}

TEST_CASE("resample") {
  for (auto mode : {Resample::BilinearUp, Resample::AvgDown}) {
    Tensor c(Shape{1, 2, 6, 6}, 3.25);
    for (auto [h, w] : {std::pair{12, 12}, {3, 3}, {4, 5}, {1, 1}}) {
      Tensor y = resample(c, h, w, mode);
      CHECK(y.shape() == Shape{1, 2, h, w});
      for (double v : y.data()) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
    }
  }
  Tensor x(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  CHECK(resample(x, 1, 1, Resample::AvgDown).item() == 2.5);

  // Align-corners-false bilinear 2x2 -> 4x4, first row by hand:
  // src = (o + .5)/2 - .5 -> -0.25(clamped 0), 0.25, 0.75, 1.25(clamped to 1)
  Tensor up = resample(x, 4, 4, Resample::BilinearUp);
  const double row0[] = {1.0, 1.25, 1.75, 2.0};
  for (int i = 0; i < 4; ++i) CHECK(up.at(0, 0, 0, i) == doctest::Approx(row0[i]).epsilon(1e-15));
  CHECK(up.at(0, 0, 1, 1) == doctest::Approx(0.75 * 1.25 + 0.25 * 3.25).epsilon(1e-15));

  // Upsample then avg_down of a constant-per-cell image restores it (2x2 case).
  Tensor cells(Shape{1, 1, 2, 2}, std::vector<double>{5, 5, 5, 5});
  Tensor back = resample(resample(cells, 4, 4, Resample::BilinearUp), 2, 2, Resample::AvgDown);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(back.data()[i] - 5.0) < 1e-9);

  // Area weights for a non-dividing ratio: 3 -> 2 gives (1, .5) and (.5, 1) over 1.5.
  auto w = resample_weights(3, 2, Resample::AvgDown);
  CHECK(w[0] == doctest::Approx(2.0 / 3));
  CHECK(w[1] == doctest::Approx(1.0 / 3));
  CHECK(w[2] == doctest::Approx(0.0));
  CHECK(w[4] == doctest::Approx(1.0 / 3));
}

TEST_CASE("concat_channels routing") {
  Tensor a = random_tensor(Shape{1, 2, 4, 4}, 1);
  Tensor b = random_tensor(Shape{1, 2, 4, 4}, 2);
  Tensor one = concat_channels({a});
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(one.data()[i] == a.data()[i]);
  a.set_requires_grad();
  b.set_requires_grad();
  Tape tape;
  {
    Tape::Scope s(tape);
    Tensor c = concat_channels({a, b});
    CHECK(c.shape() == Shape{1, 4, 4, 4});
    Tensor weights(Shape{1, 4, 1, 1}, std::vector<double>{1, 2, 3, 4});
    backward(sum(mul(c, weights)), tape);
  }
  CHECK(a.grad()[0] == 1.0);
  CHECK(a.grad()[16] == 2.0);
  CHECK(b.grad()[0] == 3.0);
  CHECK(b.grad()[16] == 4.0);
  CHECK_THROWS_AS(concat_channels({Tensor(Shape{1, 1, 4, 4}), Tensor(Shape{1, 1, 3, 4})}), DimensionError);
}

TEST_CASE("backward basics") {
  Tensor x = random_tensor(Shape{1, 2, 3, 3}, 8);
  x.set_requires_grad();
  Tape tape;
  {
    Tape::Scope s(tape);
    backward(sum(x), tape);
  }
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor y(Shape{1, 1, 1, 1}, 3.0);
  y.set_requires_grad();
  Tape t2;
  {
    Tape::Scope s(t2);
    backward(sum(mul(y, y)), t2);
  }
  CHECK(y.grad()[0] == 6.0);
  // A second sweep accumulates.
  backward(t2[t2.size() - 1].output, t2);
  CHECK(y.grad()[0] == 12.0);

  Tape t3;
  Tensor z(Shape{1, 2, 1, 1}, 1.0);
  z.set_requires_grad();
  Tensor out;
  {
    Tape::Scope s(t3);
    out = scale(z, 2.0);
  }
  CHECK_THROWS_AS(backward(out, t3), ContractError);
}

TEST_CASE("backward is deterministic after zeroing") {
  Tensor x = random_tensor(Shape{2, 3, 8, 8}, 21);
  Tensor k = random_tensor(Shape{4, 3, 3, 3}, 22);
  x.set_requires_grad();
  k.set_requires_grad();
  auto run = [&]() {
    Tape tape;
    Tape::Scope s(tape);
    Tensor loss = global_avg_pool(relu(conv2d(x, k, {1, 1, 1})));
    loss = sum(loss);
    backward(loss, tape);
  };
  run();
  std::vector<double> first(k.grad().begin(), k.grad().end());
  k.zero_grad();
  x.zero_grad();
  run();
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(k.grad()[i] == first[i]);
}

TEST_CASE("tape records in topological order") {
  Tensor x = random_tensor(Shape{1, 2, 4, 4}, 30);
  x.set_requires_grad();
  Tape tape;
  {
    Tape::Scope s(tape);
    sum(relu(add(x, x)));
  }
  REQUIRE(tape.size() == 3);
  for (std::size_t i = 0; i < tape.size(); ++i) {
    for (const auto& in : tape[i].inputs) {
      bool earlier = in.is_leaf();
      for (std::size_t j = 0; j < i; ++j) earlier = earlier || tape[j].output.same_storage(in);
      CHECK(earlier);
    }
  }
}

TEST_CASE("gradient checks for every op") {
  const double tol = 1e-4;
  Tensor x = random_tensor(Shape{2, 3, 6, 5}, 40);
  Tensor k = random_tensor(Shape{4, 3, 3, 3}, 41, 0.3);
  Tensor w = random_tensor(Shape{2, 3, 6, 5}, 42);

  CHECK(grad_check([&]() { return sum(x); }, {x}) < 1e-8);
  for (auto o : {Conv2dOptions{1, 1, 1}, Conv2dOptions{2, 1, 1}, Conv2dOptions{1, 2, 2}}) {
    CHECK(grad_check([&]() { return sum(mul(conv2d(x, k, o), conv2d(w, k, o))); }, {x, k}) < tol);
  }
  Tensor k1 = random_tensor(Shape{2, 3, 1, 1}, 43);
  CHECK(grad_check([&]() { return sum(mul(conv2d(x, k1), conv2d(x, k1))); }, {x, k1}) < tol);

  // Shift away from relu's kink so central differences stay one-sided.
  Tensor xr = random_tensor(Shape{2, 3, 6, 5}, 44);
  for (double& v : xr.mutable_data()) v += v > 0 ? 0.1 : -0.1;
  CHECK(grad_check([&]() { return sum(mul(relu(xr), w)); }, {xr}) < tol);
  CHECK(grad_check([&]() { return sum(mul(sigmoid(x), w)); }, {x}) < tol);

  Tensor m = random_tensor(Shape{2, 1, 6, 5}, 45);
  Tensor b = random_tensor(Shape{1, 3, 1, 1}, 46);
  CHECK(grad_check([&]() { return sum(mul(mul(x, m), w)); }, {x, m}) < tol);
  CHECK(grad_check([&]() { return sum(mul(add(x, b), w)); }, {x, b}) < tol);
  Tensor kb = random_tensor(Shape{4, 3, 3, 3}, 47);
  Tensor a = random_tensor(Shape{1, 3, 1, 1}, 48);
  CHECK(grad_check([&]() { return sum(mul(mul(kb, a), kb)); }, {kb, a}) < tol);

  Tensor s = random_tensor(Shape{2, 5, 1, 1}, 49);
  Tensor sw = random_tensor(Shape{2, 5, 1, 1}, 50);
  CHECK(grad_check([&]() { return sum(mul(softmax_channels(s), sw)); }, {s}) < tol);
  Tensor gw = random_tensor(Shape{2, 3, 1, 1}, 55);
  CHECK(grad_check([&]() { return sum(mul(global_avg_pool(x), gw)); }, {x}) < tol);
  CHECK(grad_check([&]() { return sum(scale(mul(x, x), -0.7)); }, {x}) < tol);

  for (auto [h, wd, mode] : {std::tuple{12, 10, Resample::BilinearUp}, std::tuple{9, 7, Resample::BilinearUp},
                             std::tuple{3, 5, Resample::AvgDown}, std::tuple{4, 3, Resample::AvgDown}}) {
    Tensor target = random_tensor(Shape{2, 3, h, wd}, 51);
    CHECK(grad_check([&, h = h, wd = wd, mode = mode]() { return sum(mul(resample(x, h, wd, mode), target)); }, {x}) < tol);
  }
  Tensor c2 = random_tensor(Shape{2, 2, 6, 5}, 52);
  Tensor cw = random_tensor(Shape{2, 5, 6, 5}, 53);
  CHECK(grad_check([&]() { return sum(mul(concat_channels({x, c2}), cw)); }, {x, c2}) < tol);
  Tensor sl = random_tensor(Shape{2, 2, 6, 5}, 54);
  CHECK(grad_check([&]() { return sum(mul(slice_channels(x, 1, 2), sl)); }, {x}) < tol);
}

TEST_CASE("chained conv-relu-gap matches finite differences") {
  Tensor x = random_tensor(Shape{1, 2, 8, 8}, 60);
  Tensor k = random_tensor(Shape{3, 2, 3, 3}, 61, 0.5);
  CHECK(grad_check([&](const Tensor& kk) { return sum(global_avg_pool(relu(conv2d(x, kk, {1, 1, 1})))); }, k) < 1e-4);
}

TEST_CASE("finite check mode flags NaN") {
  set_check_finite(true);
  Tensor x(Shape{1, 1, 1, 1}, std::nan(""));
  CHECK_THROWS_AS(assert_finite(x, "test"), NumericError);
  set_check_finite(false);
}

TEST_CASE("adam and step decay") {
  ParameterStore store;
  Tensor p = store.add("p", Shape{1, 1, 1, 2});
  CHECK_THROWS_AS(store.add("p", Shape{1, 1, 1, 1}), ContractError);
  p.mutable_grad()[0] = 2.0;
  p.mutable_grad()[1] = -0.5;
  Adam adam(store, AdamOptions{0.1});
  adam.step(0.1);
  // First bias-corrected step moves each coordinate by lr * sign(g).
  CHECK(p.data()[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p.data()[1] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(step_decay_lr(1e-4, 29, 30, 0.9) == doctest::Approx(1e-4));
  CHECK(step_decay_lr(1e-4, 30, 30, 0.9) == doctest::Approx(0.9e-4));
  CHECK(step_decay_lr(1e-4, 65, 30, 0.9) == doctest::Approx(0.81e-4));
}
