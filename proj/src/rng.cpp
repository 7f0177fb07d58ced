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

#include "kpn/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kpn {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_key(std::initializer_list<std::uint64_t> ids) {
  std::uint64_t key = 0x6b706e2d62757273ULL;
  for (std::uint64_t id : ids) key = mix64(key ^ mix64(id));
  return key;
}

std::uint64_t CounterStream::bits(std::uint64_t index) const {
  return mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double CounterStream::uniform(std::uint64_t index) const {
  return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
}

double CounterStream::normal(std::uint64_t index) const {
  const double u1 = 1.0 - uniform(2 * index);  // (0, 1]
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("rng: empty integer range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = span == 0 ? 0 : (~std::uint64_t{0} / span) * span;
  for (;;) {
    const std::uint64_t b = next_bits();
    if (limit == 0 || b < limit) {
      return lo + static_cast<std::int64_t>(span == 0 ? b : b % span);
    }
  }
}

std::int64_t Rng::poisson(double rate) {
  if (!(rate >= 0.0) || rate > 500.0) {
    throw std::invalid_argument("rng: poisson rate must lie in [0, 500]");
  }
  if (rate == 0.0) return 0;
  const double u = uniform();
  double p = std::exp(-rate);
  double cdf = p;
  std::int64_t k = 0;
  while (u >= cdf && p > 0.0) {
    ++k;
    p *= rate / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

}  // namespace kpn
