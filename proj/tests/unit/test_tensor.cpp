// Copyright 2026 The kpn-burst Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "kpn/ops.hpp"
#include "kpn/tensor.hpp"
#include "test_support.hpp"

using namespace kpn;
using kpn::testing::all_coords;
using kpn::testing::gradcheck;
using kpn::testing::random_values;

namespace {

using T = Tensor<double>;

T param(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  const std::size_t n = element_count(shape);
  return T::parameter(std::move(shape), random_values(n, rng, lo, hi));
}

// Fixed random projection so every output element influences the loss.
T project(const T& x, std::uint64_t seed) {
  Rng rng(seed);
  return reduce_sum(mul(x, T::constant(x.shape(), random_values(x.size(), rng))));
}

}  // namespace

TEST_CASE("conv2d scalar multiply-add") {
  T x = T::constant({1, 1, 1}, std::vector<double>{2});
  T w = T::constant({1, 1, 1, 1}, std::vector<double>{3});
  T b = T::constant({1}, std::vector<double>{1});
  CHECK(conv2d(x, w, b).item() == 7.0);
}

TEST_CASE("conv2d identity kernel leaves input unchanged") {
  Rng rng(1);
  T x = T::constant({2, 5, 6}, random_values(60, rng));
  std::vector<double> w(2 * 2 * 9, 0.0);
  w[(0 * 2 + 0) * 9 + 4] = 1.0;
  w[(1 * 2 + 1) * 9 + 4] = 1.0;
  T y = conv2d(x, T::constant({2, 2, 3, 3}, w), T::constant({2}, 0.0));
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.values()[i] == x.values()[i]);
}

TEST_CASE("conv2d gradients match central differences") {
  Rng rng(2);
  T x = param({1, 4, 4}, rng);
  T w = param({2, 1, 3, 3}, rng);
  T b = param({2}, rng);
  auto loss = [&] { return project(conv2d(x, w, b), 99); };
  CHECK(gradcheck(x, loss, all_coords(x.size())) < 1e-4);
  CHECK(gradcheck(w, loss, all_coords(w.size())) < 1e-4);
  CHECK(gradcheck(b, loss, all_coords(b.size())) < 1e-4);
}

TEST_CASE("conv2d multi-channel 5x5 and 1x1 gradients") {
  Rng rng(3);
  T x = param({3, 5, 4}, rng);
  for (std::size_t k : {1u, 5u}) {
    T w = param({2, 3, k, k}, rng);
    T b = param({2}, rng);
    auto loss = [&] { return project(conv2d(x, w, b), 7); };
    CHECK(gradcheck(x, loss, all_coords(x.size())) < 1e-4);
    CHECK(gradcheck(w, loss, all_coords(w.size())) < 1e-4);
  }
}

TEST_CASE("conv2d rejects malformed operands") {
  T x = T::constant({2, 4, 4}, 0.0);
  CHECK_THROWS_AS(conv2d(x, T::constant({1, 3, 3, 3}, 0.0), T::constant({1}, 0.0)), ShapeError);
  CHECK_THROWS_AS(conv2d(x, T::constant({1, 2, 2, 2}, 0.0), T::constant({1}, 0.0)), ShapeError);
  CHECK_THROWS_AS(conv2d(x, T::constant({1, 2, 3, 3}, 0.0), T::constant({2}, 0.0)), ShapeError);
  CHECK_THROWS_AS(conv2d(T::constant({4, 4}, 0.0), T::constant({1, 2, 3, 3}, 0.0),
                         T::constant({1}, 0.0)),
                  ShapeError);
}

TEST_CASE("avg_pool2 forward, rejection and gradient") {
  T x = T::constant({1, 2, 2}, std::vector<double>{1, 3, 5, 7});
  T y = avg_pool2(x);
  CHECK(y.shape() == Shape{1, 1, 1});
  CHECK(y.item() == 4.0);
  CHECK_THROWS_AS(avg_pool2(T::constant({1, 3, 4}, 0.0)), ShapeError);
  Rng rng(4);
  T p = param({2, 4, 6}, rng);
  CHECK(gradcheck(p, [&] { return project(avg_pool2(p), 5); }, all_coords(p.size())) < 1e-4);
}

TEST_CASE("upsample_bilinear2 keeps constants and matches half-pixel sampling") {
  T c = T::constant({1, 3, 2}, 0.37);
  T u = upsample_bilinear2(c);
  CHECK(u.shape() == Shape{1, 6, 4});
  for (double v : u.values()) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));

  // 1-D row [0, 4]: outputs sample at -0.25, 0.25, 0.75, 1.25 (clamped).
  T r = T::constant({1, 1, 2}, std::vector<double>{0, 4});
  T ur = upsample_bilinear2(r);
  const std::vector<double> want = {0, 1, 3, 4};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ur.values()[i] == doctest::Approx(want[i]));
    CHECK(ur.values()[4 + i] == doctest::Approx(want[i]));
  }
  Rng rng(5);
  T p = param({2, 3, 4}, rng);
  CHECK(gradcheck(p, [&] { return project(upsample_bilinear2(p), 6); }, all_coords(p.size())) <
        1e-4);
}

TEST_CASE("relu and abs") {
  T a = T::parameter({2}, std::vector<double>{-2, 2});
  T r = relu(a);
  CHECK(r.values()[0] == 0.0);
  CHECK(r.values()[1] == 2.0);
  reduce_sum(r).backward();
  CHECK(a.grad()[0] == 0.0);
  CHECK(a.grad()[1] == 1.0);

  T z = T::parameter({3}, std::vector<double>{-1.5, 0.0, 2.0});
  T m = abs(z);
  CHECK(m.values()[0] == 1.5);
  reduce_sum(m).backward();
  CHECK(z.grad()[0] == -1.0);
  CHECK(z.grad()[1] == 0.0);
  CHECK(z.grad()[2] == 1.0);

  Rng rng(6);
  T p = param({20}, rng);
  CHECK(gradcheck(p, [&] { return project(relu(p), 1); }, all_coords(p.size())) < 1e-4);
  CHECK(gradcheck(p, [&] { return project(abs(p), 2); }, all_coords(p.size())) < 1e-4);
}

TEST_CASE("concat_channels stacks planes and routes gradient") {
  Rng rng(7);
  T a = param({1, 2, 3}, rng);
  T b = param({2, 2, 3}, rng);
  T c = concat_channels(a, b);
  CHECK(c.shape() == Shape{3, 2, 3});
  CHECK(c.values()[0] == a.values()[0]);
  CHECK(c.values()[6] == b.values()[0]);
  auto loss = [&] { return project(concat_channels(a, b), 3); };
  CHECK(gradcheck(a, loss, all_coords(a.size())) < 1e-4);
  CHECK(gradcheck(b, loss, all_coords(b.size())) < 1e-4);
  CHECK_THROWS_AS(concat_channels(a, T::constant({1, 3, 3}, 0.0)), ShapeError);
}

TEST_CASE("elementwise ops with scalar broadcast") {
  Rng rng(8);
  T a = param({2, 3}, rng);
  T b = param({2, 3}, rng);
  T s = param({1}, rng);
  for (int op = 0; op < 3; ++op) {
    auto f = [&](const T& x, const T& y) {
      return op == 0 ? add(x, y) : op == 1 ? sub(x, y) : mul(x, y);
    };
    auto loss = [&] { return project(f(f(a, b), s), 11); };
    CHECK(gradcheck(a, loss, all_coords(a.size())) < 1e-4);
    CHECK(gradcheck(b, loss, all_coords(b.size())) < 1e-4);
    CHECK(gradcheck(s, loss, all_coords(1)) < 1e-4);
    auto loss2 = [&] { return project(f(s, a), 12); };
    CHECK(gradcheck(s, loss2, all_coords(1)) < 1e-4);
  }
  CHECK_THROWS_AS(add(a, T::constant({3, 2}, 0.0)), ShapeError);
  CHECK(sub(T::scalar(5.0), T::scalar(2.0)).item() == 3.0);
  CHECK(mul(T::scalar(5.0), T::scalar(2.0)).item() == 10.0);
}

TEST_CASE("reductions, reshape, axis swap, select and leading mean") {
  Rng rng(9);
  T a = param({3, 2, 4}, rng);
  CHECK(gradcheck(a, [&] { return reduce_mean(mul(a, a)); }, all_coords(a.size())) < 1e-4);
  CHECK(gradcheck(a, [&] { return project(reshape(a, {6, 4}), 1); }, all_coords(a.size())) <
        1e-4);
  CHECK(gradcheck(a, [&] { return project(swap_last_axes(a), 2); }, all_coords(a.size())) <
        1e-4);
  CHECK(gradcheck(a, [&] { return project(select(a, 1), 3); }, all_coords(a.size())) < 1e-4);
  CHECK(gradcheck(a, [&] { return project(mean_leading(a), 4); }, all_coords(a.size())) < 1e-4);
  CHECK(gradcheck(a, [&] { return scale(reduce_sum(a), -2.5); }, all_coords(a.size())) < 1e-4);

  T s = swap_last_axes(a);
  CHECK(s.shape() == Shape{3, 4, 2});
  CHECK(s.values()[(1 * 4 + 3) * 2 + 1] == a.values()[(1 * 2 + 1) * 4 + 3]);
  CHECK(select(a, 2).values()[5] == a.values()[2 * 8 + 5]);
  CHECK_THROWS_AS(reshape(a, {5, 5}), ShapeError);
  CHECK_THROWS_AS(select(a, 3), ShapeError);
}

TEST_CASE("backward basics") {
  T x = T::parameter({1}, std::vector<double>{3});
  mul(x, x).backward();
  CHECK(x.grad()[0] == 6.0);

  T v = T::parameter({4}, std::vector<double>{1, 2, 3, 4});
  reduce_mean(v).backward();
  for (double g : v.grad()) CHECK(g == 0.25);
}

TEST_CASE("backward accumulates until zero_grad and rejects non-scalars") {
  T x = T::parameter({1}, std::vector<double>{3});
  mul(x, x).backward();
  mul(x, x).backward();
  CHECK(x.grad()[0] == 12.0);
  x.zero_grad();
  mul(x, x).backward();
  CHECK(x.grad()[0] == 6.0);
  T v = T::parameter({2}, std::vector<double>{1, 2});
  CHECK_THROWS_AS(mul(v, v).backward(), ShapeError);
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(10);
  T x = param({5}, rng);
  auto f = [&] { return reduce_sum(mul(x, x)); };
  auto g = [&] { return reduce_sum(relu(x)); };
  x.zero_grad();
  f().backward();
  const std::vector<double> gf(x.grad().begin(), x.grad().end());
  x.zero_grad();
  g().backward();
  const std::vector<double> gg(x.grad().begin(), x.grad().end());
  x.zero_grad();
  add(scale(f(), 2.0), scale(g(), -3.0)).backward();
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * gf[i] - 3.0 * gg[i]).epsilon(1e-12));
  }
}

TEST_CASE("shared subexpressions receive summed gradient") {
  T x = T::parameter({1}, std::vector<double>{2});
  T y = mul(x, x);
  add(y, mul(y, x)).backward();  // x^2 + x^3
  CHECK(x.grad()[0] == doctest::Approx(2 * 2 + 3 * 4));
}

TEST_CASE("constants stay off the tape") {
  T c = T::constant({2}, 1.0);
  T r = mul(c, c);
  CHECK_FALSE(r.requires_grad());
  CHECK(r.is_leaf());
  T p = T::parameter({2}, std::vector<double>{1, 2});
  T q = mul(p, p);
  CHECK(q.requires_grad());
  CHECK_THROWS(q.mutable_values());
}

TEST_CASE("forward values are deterministic") {
  auto run = [] {
    Rng rng(11);
    T x = param({2, 8, 8}, rng);
    T w = param({3, 2, 3, 3}, rng);
    T b = param({3}, rng);
    T y = upsample_bilinear2(avg_pool2(relu(conv2d(x, w, b))));
    return std::vector<double>(y.values().begin(), y.values().end());
  };
  CHECK(run() == run());
}

TEST_CASE("tensor construction errors") {
  CHECK_THROWS_AS(T::constant({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(T::constant({2, 0}, std::vector<double>{}), ShapeError);
  CHECK_THROWS_AS(T::constant({2}, 0.0).item(), ShapeError);
}
