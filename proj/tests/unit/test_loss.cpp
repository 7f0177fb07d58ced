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

#include <cmath>

#include "kpn/loss.hpp"
#include "kpn/ops.hpp"
#include "test_support.hpp"

using namespace kpn;
using kpn::testing::loss_oracle;
using kpn::testing::random_values;

TEST_CASE("sRGB curve values") {
  CHECK(srgb(0.0) == 0.0);
  CHECK(srgb(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(srgb(0.0031308) == doctest::Approx(0.040449).epsilon(1e-5));
  CHECK(srgb(0.5) == doctest::Approx(0.735357).epsilon(1e-6));
  CHECK(srgb(-0.01) == doctest::Approx(-0.1292));
}

TEST_CASE("sRGB is continuous at the knee and monotone") {
  const double knee = 0.0031308;
  CHECK(std::abs(12.92 * knee - (1.055 * std::pow(knee, 1 / 2.4) - 0.055)) < 1e-4);
  CHECK(std::abs(srgb(std::nextafter(knee, 1.0)) - srgb(knee)) < 1e-4);
  double prev = srgb(-1.0);
  for (int i = 1; i <= 3000; ++i) {
    const double v = srgb(-1.0 + i * 0.001);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("taped sRGB gradient") {
  Rng rng(1);
  auto x = Tensor<double>::parameter({30}, random_values(30, rng, -0.2, 1.2));
  const auto w = Tensor<double>::constant({30}, random_values(30, rng));
  auto loss = [&] { return reduce_sum(mul(srgb(x), w)); };
  CHECK(kpn::testing::gradcheck(x, loss, kpn::testing::all_coords(30)) < 1e-4);
}

TEST_CASE("grad_op") {
  const auto c = Tensor<double>::constant({3, 4}, 0.7);
  const auto [cx, cy] = grad_op(c);
  for (double v : cx.values()) CHECK(v == 0.0);
  for (double v : cy.values()) CHECK(v == 0.0);

  const auto row = Tensor<double>::constant({2, 3}, std::vector<double>{1, 3, 6, 1, 3, 6});
  const auto [rx, ry] = grad_op(row);
  CHECK(rx.shape() == Shape{2, 2});
  CHECK(rx.values()[0] == 2.0);
  CHECK(rx.values()[1] == 3.0);
  CHECK(ry.shape() == Shape{1, 3});

  Rng rng(2);
  auto img = Tensor<double>::parameter({2, 4, 5}, random_values(40, rng));
  const auto [gx, gy] = grad_op(img);
  const auto v = img.values();
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t y = 0; y < 4; ++y) {
      for (std::size_t x = 0; x < 5; ++x) {
        if (x + 1 < 5) CHECK(gx.values()[(p * 4 + y) * 4 + x] == v[(p * 4 + y) * 5 + x + 1] - v[(p * 4 + y) * 5 + x]);
        if (y + 1 < 4) CHECK(gy.values()[(p * 3 + y) * 5 + x] == v[(p * 4 + y + 1) * 5 + x] - v[(p * 4 + y) * 5 + x]);
      }
    }
  }
  const auto wx = Tensor<double>::constant(gx.shape(), random_values(gx.size(), rng));
  const auto wy = Tensor<double>::constant(gy.shape(), random_values(gy.size(), rng));
  auto loss = [&] {
    const auto [a, b] = grad_op(img);
    return add(reduce_sum(mul(a, wx)), reduce_sum(mul(b, wy)));
  };
  CHECK(kpn::testing::gradcheck(img, loss, kpn::testing::all_coords(40)) < 1e-4);
  CHECK_THROWS_AS(grad_op(Tensor<double>::constant({1, 5}, 0.0)), ShapeError);
  CHECK_THROWS_AS(grad_op(Tensor<double>::constant({5}, 0.0)), ShapeError);
}

TEST_CASE("basic loss special cases") {
  Rng rng(3);
  const auto y = Tensor<double>::constant({6, 7}, random_values(42, rng, 0.0, 1.0));
  CHECK(basic_loss(y, y).item() == 0.0);
  const auto a = Tensor<double>::constant({5, 5}, 0.4), b = Tensor<double>::constant({5, 5}, 0.2);
  const double d = srgb(0.4) - srgb(0.2);
  CHECK(basic_loss(a, b, {0.7, 3.0}).item() == doctest::Approx(0.7 * d * d).epsilon(1e-12));
  CHECK_THROWS_AS(basic_loss(a, Tensor<double>::constant({5, 4}, 0.2)), ShapeError);
  CHECK_THROWS(basic_loss(a, b, {}, 0.0));
}

TEST_CASE("basic loss matches the scalar-loop oracle") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t h = 2 + rng.uniform_int(0, 8), w = 2 + rng.uniform_int(0, 8);
    const auto e = random_values(h * w, rng, -0.05, 0.6);
    const auto t = random_values(h * w, rng, 0.0, 0.6);
    const double l2 = rng.uniform(0.1, 2.0), l1 = rng.uniform(0.1, 2.0), s = rng.uniform(0.3, 1.0);
    const double got = basic_loss(Tensor<double>::constant({h, w}, e),
                                  Tensor<double>::constant({h, w}, t), {l2, l1}, s)
                           .item();
    CHECK(std::abs(got - loss_oracle(e, t, h, w, l2, l1, s)) < 1e-6);
  }
}

TEST_CASE("basic loss gradients including negative inputs") {
  Rng rng(5);
  auto e = Tensor<double>::parameter({6, 5}, random_values(30, rng, -0.1, 0.9));
  const auto t = Tensor<double>::constant({6, 5}, random_values(30, rng, 0.0, 0.9));
  auto loss = [&] { return basic_loss(e, t, {1.0, 1.0}, 0.8); };
  CHECK(kpn::testing::gradcheck(e, loss, kpn::testing::all_coords(30)) < 1e-3);
}

TEST_CASE("anneal weight") {
  CHECK(anneal_weight({100.0, 0.9998, 0}) == 100.0);
  CHECK(anneal_weight({100.0, 0.9998, 40000}) == doctest::Approx(0.033546).epsilon(1e-4));
  const double crossing = std::log(100.0) / -std::log(0.9998);
  CHECK(crossing == doctest::Approx(23025.0).epsilon(1e-4));
  const auto before = static_cast<std::int64_t>(std::floor(crossing));
  CHECK(anneal_weight({100.0, 0.9998, before}) > 1.0);
  CHECK(anneal_weight({100.0, 0.9998, before + 1}) < 1.0);
  CHECK_THROWS(anneal_weight({100.0, 1.5, 0}));
  CHECK_THROWS(anneal_weight({-1.0, 0.5, 0}));
}

TEST_CASE("annealed loss composition") {
  Rng rng(6);
  const std::size_t h = 5, w = 6;
  const auto per = Tensor<double>::constant({2, h, w}, random_values(2 * h * w, rng, 0.0, 1.0));
  const auto out = Tensor<double>::constant({h, w}, random_values(h * w, rng, 0.0, 1.0));
  const auto tgt = Tensor<double>::constant({h, w}, random_values(h * w, rng, 0.0, 1.0));
  const AnnealSchedule sched{100.0, 0.9998, 1234};
  const AnnealedLoss<double> l = annealed_loss(per, out, tgt, sched);
  const double terms = basic_loss(select(per, 0), tgt).item() + basic_loss(select(per, 1), tgt).item();
  CHECK(l.total.item() ==
        doctest::Approx(basic_loss(out, tgt).item() + anneal_weight(sched) * terms).epsilon(1e-12));
  CHECK(l.weight == anneal_weight(sched));
  CHECK(l.per_frame.item() == doctest::Approx(terms));

  const AnnealedLoss<double> off = annealed_loss(per, out, tgt, {0.0, 0.9998, 5});
  CHECK(off.total.item() == doctest::Approx(basic_loss(out, tgt).item()).epsilon(1e-14));

  const auto same = Tensor<double>::constant({2, h, w}, [&] {
    std::vector<double> v(tgt.values().begin(), tgt.values().end());
    v.insert(v.end(), tgt.values().begin(), tgt.values().end());
    return v;
  }());
  CHECK(annealed_loss(same, tgt, tgt, sched).total.item() == 0.0);

  const double now = annealed_loss(per, out, tgt, sched).total.item();
  const double later = annealed_loss(per, out, tgt, {100.0, 0.9998, 1235}).total.item();
  CHECK(later < now);
  CHECK_THROWS_AS(annealed_loss(out, out, tgt, sched), ShapeError);
}

TEST_CASE("annealed loss gradients") {
  Rng rng(7);
  const std::size_t h = 4, w = 5;
  auto per = Tensor<double>::parameter({3, h, w}, random_values(3 * h * w, rng, -0.05, 0.8));
  auto out = Tensor<double>::parameter({h, w}, random_values(h * w, rng, -0.05, 0.8));
  const auto tgt = Tensor<double>::constant({h, w}, random_values(h * w, rng, 0.0, 0.8));
  auto loss = [&] { return annealed_loss(per, out, tgt, {2.0, 0.99, 7}, {}, 0.9).total; };
  CHECK(kpn::testing::gradcheck(per, loss, kpn::testing::all_coords(per.size())) < 1e-3);
  CHECK(kpn::testing::gradcheck(out, loss, kpn::testing::all_coords(out.size())) < 1e-3);
}
