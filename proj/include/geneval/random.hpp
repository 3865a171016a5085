// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace geneval {

/// Seeded generator whose output is identical across standard libraries:
/// mt19937_64 is fully specified, and every derived draw below is computed
/// here rather than through the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n), unbiased (rejection sampling). n must be positive.
  std::int64_t uniform_index(std::int64_t n);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal via Box-Muller.
  double normal();

  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(static_cast<std::int64_t>(i)));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::int64_t> permutation(std::int64_t n);

  /// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Combines values into one seed with splitmix64 finalization.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

}  // namespace geneval
