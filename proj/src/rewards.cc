// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/rewards.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ppow {

void RewardConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be > 0");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be >= 0");
}

double speedup_reward(std::size_t k, double gamma) {
  const double kd = static_cast<double>(k);
  return kd / (kd * gamma + 1.0);
}

TokenSeq reference_window(const TargetAdapter& target,
                          std::span<const TokenId> prefix, std::size_t K) {
  if (K < 1) throw std::invalid_argument("reference_window: K must be >= 1");
  TokenSeq ctx(prefix.begin(), prefix.end());
  TokenSeq ref;
  ref.reserve(K);
  for (std::size_t t = 0; t < K; ++t) {
    TokenId y = target.next_dist(ctx).argmax();
    ref.push_back(y);
    ctx.push_back(y);
  }
  return ref;
}

namespace {

// Sum of log P(seq_t | prefix, seq_<t); -infinity on an exact zero.
double sequence_logprob(std::span<const TokenId> seq, const TargetAdapter& target,
                        std::span<const TokenId> prefix) {
  TokenSeq ctx(prefix.begin(), prefix.end());
  double total = 0.0;
  for (TokenId y : seq) {
    const double p = target.next_dist(ctx)[y];
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    total += floored_log(p);
    ctx.push_back(y);
  }
  return total;
}

}  // namespace

double proximity_gap(std::span<const TokenId> window,
                     std::span<const TokenId> reference,
                     const TargetAdapter& target,
                     std::span<const TokenId> prefix) {
  if (window.size() != reference.size()) {
    throw std::invalid_argument("proximity_gap: window and reference lengths differ");
  }
  const double drafted = sequence_logprob(window, target, prefix);
  if (std::isinf(drafted)) return std::numeric_limits<double>::infinity();
  return sequence_logprob(reference, target, prefix) - drafted;
}

WindowReward total_reward(const VerificationOutcome& outcome,
                          const SpeculativeWindow& window,
                          const TargetAdapter& target,
                          std::span<const TokenId> prefix,
                          const RewardConfig& cfg) {
  WindowReward r;
  r.k = outcome.accepted_len;
  r.r_speedup = speedup_reward(r.k, cfg.gamma);
  if (r.k == 0 || cfg.force_delta) {
    const TokenSeq ref = reference_window(target, prefix, window.size());
    r.delta = proximity_gap(window.tokens, ref, target, prefix);
  }
  if (r.k == 0 && *r.delta < cfg.epsilon) r.r_dist = cfg.eta;
  r.total = r.r_speedup + r.r_dist;
  return r;
}

}  // namespace ppow
