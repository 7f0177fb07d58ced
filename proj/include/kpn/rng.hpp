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

#ifndef KPN_RNG_HPP_
#define KPN_RNG_HPP_

#include <cstdint>
#include <initializer_list>

namespace kpn {

// Counter-based random streams. Every draw is a pure function of a 64-bit key
// and a counter, so results do not depend on iteration or thread order and
// are identical across platforms.

std::uint64_t mix64(std::uint64_t x);

/// Folds a sequence of identifiers (seed, burst id, frame id, ...) into a key.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> ids);

/// Random access stream: value(i) depends only on (key, i).
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}

  std::uint64_t bits(std::uint64_t index) const;
  /// Uniform in [0, 1).
  double uniform(std::uint64_t index) const;
  /// Standard normal via Box-Muller on counters 2i and 2i+1.
  double normal(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

/// Sequential generator over a CounterStream.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : stream_(key) {}
  static Rng derived(std::initializer_list<std::uint64_t> ids) {
    return Rng(derive_key(ids));
  }

  std::uint64_t next_bits() { return stream_.bits(counter_++); }
  double uniform() { return stream_.uniform(counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal() { return stream_.normal(counter_++); }
  /// Poisson draw by sequential inversion; rate must be in [0, 500].
  std::int64_t poisson(double rate);

  std::uint64_t counter() const { return counter_; }

 private:
  CounterStream stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace kpn

#endif  // KPN_RNG_HPP_
