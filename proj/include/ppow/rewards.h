// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "ppow/models.h"
#include "ppow/specdec.h"
#include "ppow/types.h"

namespace ppow {

struct RewardConfig {
  double gamma = 0.12;    // drafter cost relative to one target pass
  double epsilon = 0.5;   // proximity tolerance
  double eta = 1.0;       // proximity reward scale
  // Evaluate the proximity gap for every window, not only k == 0 ones.
  // Rewards are unchanged; this exists for auditing.
  bool force_delta = false;

  void validate() const;
};

struct WindowReward {
  double r_speedup = 0.0;
  double r_dist = 0.0;
  double total = 0.0;
  std::size_t k = 0;
  std::optional<double> delta;
};

// k / (k * gamma + 1)
double speedup_reward(std::size_t k, double gamma);

// Greedy target continuation of length K; ties go to the lowest token id.
TokenSeq reference_window(const TargetAdapter& target,
                          std::span<const TokenId> prefix, std::size_t K);

// Cumulative target log-likelihood of `reference` minus that of `window`,
// each scored under its own preceding tokens. +infinity when a window token
// has exactly zero target mass.
double proximity_gap(std::span<const TokenId> window,
                     std::span<const TokenId> reference,
                     const TargetAdapter& target,
                     std::span<const TokenId> prefix);

// R_speedup(k) plus eta * [k == 0] * [delta < epsilon]. The bonus token never
// counts toward k.
WindowReward total_reward(const VerificationOutcome& outcome,
                          const SpeculativeWindow& window,
                          const TargetAdapter& target,
                          std::span<const TokenId> prefix,
                          const RewardConfig& cfg);

}  // namespace ppow
