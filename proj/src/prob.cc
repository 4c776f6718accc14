// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/prob.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ppow {

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

ProbVector::ProbVector(std::vector<double> probs) : p_(std::move(probs)) {
  if (p_.empty()) throw std::invalid_argument("ProbVector: empty");
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("ProbVector: entry not a finite non-negative "
                                  "real: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("ProbVector: sums to " + std::to_string(sum));
  }
}

ProbVector ProbVector::uniform(std::size_t n) {
  return ProbVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ProbVector ProbVector::one_hot(std::size_t n, TokenId index) {
  std::vector<double> p(n, 0.0);
  p.at(index) = 1.0;
  return ProbVector(std::move(p));
}

ProbVector ProbVector::normalized(std::vector<double> weights) {
  double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw std::invalid_argument("ProbVector::normalized: non-positive mass");
  }
  for (double& w : weights) w /= sum;
  return ProbVector(std::move(weights));
}

ProbVector ProbVector::softmax(std::span<const double> logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) e[i] = std::exp(logits[i] - mx);
  return normalized(std::move(e));
}

TokenId ProbVector::argmax() const {
  return static_cast<TokenId>(std::max_element(p_.begin(), p_.end()) - p_.begin());
}

TokenId sample_categorical(std::span<const double> weights, RngStream& rng) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double target = rng.uniform() * total;
  double cum = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last_positive = i;
    if (target <= cum) return static_cast<TokenId>(i);
  }
  if (last_positive == weights.size()) {
    throw std::invalid_argument("sample_categorical: no positive mass");
  }
  return static_cast<TokenId>(last_positive);
}

}  // namespace ppow
