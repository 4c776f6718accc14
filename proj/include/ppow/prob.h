// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ppow/rng.h"
#include "ppow/types.h"

namespace ppow {

// Log-probabilities are computed as log(max(p, kProbFloor)).
inline constexpr double kProbFloor = 1e-300;
inline constexpr double kSumTolerance = 1e-12;

double floored_log(double p);

// An exact categorical distribution over a vocabulary. Construction
// validates: non-negative finite entries summing to 1 within 1e-12.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> probs);

  static ProbVector uniform(std::size_t n);
  static ProbVector one_hot(std::size_t n, TokenId index);
  // Divides non-negative weights by their sum. Throws if the sum is zero.
  static ProbVector normalized(std::vector<double> weights);
  // Numerically stable softmax of `logits`.
  static ProbVector softmax(std::span<const double> logits);

  std::size_t size() const { return p_.size(); }
  bool empty() const { return p_.empty(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }
  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

  double log_prob(TokenId y) const { return floored_log(p_[y]); }

  // Lowest token id among the maximal entries.
  TokenId argmax() const;

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> p_;
};

// Inverse-CDF draw; never returns a zero-probability index.
TokenId sample_categorical(std::span<const double> weights, RngStream& rng);
inline TokenId sample(const ProbVector& p, RngStream& rng) {
  return sample_categorical(p.values(), rng);
}

}  // namespace ppow
