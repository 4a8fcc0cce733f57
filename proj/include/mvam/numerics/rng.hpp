// Copyright 2026 The mvam Authors.
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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace mvam::numerics {

/// Seeded pseudo-random source.
///
/// Only the raw 64-bit engine output is standardized by the C++ library, so
/// every derived distribution (uniform reals, bounded integers, normals) is
/// computed here rather than through <random>'s distribution classes, whose
/// algorithms differ between standard library implementations.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::string_view algorithm() const { return kAlgorithm; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_range(std::int64_t lo, std::int64_t hi);

  /// Normal draw via Box-Muller; consumes exactly two engine outputs.
  double normal(double mean, double stddev);

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent generator for sub-stream `stream`, a pure function of
  /// (seed, stream). Used to give every dataset pair its own stream.
  Rng derive(std::uint64_t stream) const;

  /// Text snapshot of the engine state (round-trips through restore()).
  std::string state() const;
  void restore(std::string_view state);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; mixes seeds for derived streams.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mvam::numerics
