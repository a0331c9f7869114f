// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace segrobust {

std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes an ordered tuple of integers into one seed, e.g.
/// derive_seed({global_seed, attack_index, example_id}).
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Seeded generator with distribution code that is identical on every
/// platform (the std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace segrobust
