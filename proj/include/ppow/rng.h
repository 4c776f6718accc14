// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace ppow {

// Counter-based random stream. Each draw hashes (seed, counter) with the
// SplitMix64 finalizer, so a stream is fully described by those two values.
// Child streams depend only on the parent seed and the label, never on how
// many values the parent has already produced.
//
// Satisfies UniformRandomBitGenerator, so it can drive <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  RngStream child(std::string_view label) const;
  RngStream child(std::uint64_t index) const;

  result_type operator()();

  // Uniform on (0, 1]. Zero is excluded so that `u <= alpha` never accepts
  // when alpha == 0.
  double uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ppow
