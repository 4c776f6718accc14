// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ppow/models.h"
#include "ppow/prob.h"
#include "ppow/rng.h"
#include "ppow/types.h"

namespace ppow {

struct DistPair {
  ProbVector p;  // target
  ProbVector q;  // drafter
};

// Symmetric Dirichlet(1) draw: uniform over the simplex.
ProbVector random_simplex(std::size_t n, RngStream& rng);

// (1/2) sum |p - q|
double total_variation(const DistPair& pair);

// sum min(p, q), the expected acceptance rate of one drafted token.
double acceptance_probability(const DistPair& pair);

struct PinskerResult {
  double alpha = 0.0;
  double lower_bound = 0.0;  // 1 - sqrt(KL(p || q) / 2)
  bool holds = false;
};

PinskerResult pinsker_check(const DistPair& pair);

// Draws y ~ q and accepts with probability min(1, p(y) / q(y)).
double monte_carlo_acceptance(const DistPair& pair, std::size_t trials, RngStream& rng);

struct NablaRecord {
  double delta = 0.0;  // log pi_target - log pi_theta
  double nabla = 0.0;  // exp(delta) - delta - 1
};

NablaRecord nabla_metric(double target_logprob, double draft_logprob);

struct WindowSet {
  std::vector<std::size_t> members;  // indices into the input prefixes
  std::vector<std::size_t> ks;
  double tau = 0.0;    // mean k over members
  double nabla = 0.0;  // mean nabla over all drafted tokens of members
};

struct EasyHardPartition {
  WindowSet easy;  // k == K
  WindowSet hard;  // k < K
};

// Drafts one window per prefix from `baseline` (prefix i with rng.child(i)),
// verifies it and splits by full acceptance.
EasyHardPartition easy_hard_partition(const DraftPolicy& baseline,
                                      const TargetAdapter& target,
                                      const std::vector<TokenSeq>& prefixes,
                                      std::size_t K, RngStream rng);

// Synthetic serving cost, in units of one target forward pass.
struct ServingCostModel {
  double draft_token_cost = 0.2;
  double verify_cost = 1.0;
  double overhead = 0.1;
};

struct RewardRow {
  std::size_t k = 0;
  double measured = 0.0;    // k * verify / (k * draft + verify + overhead)
  double cost_aware = 0.0;  // k / (k * gamma + 1)
};

struct RewardTable {
  double gamma = 0.0;
  std::vector<RewardRow> rows;
  bool measured_monotone = false;    // non-decreasing in k
  bool cost_aware_monotone = false;  // non-decreasing in k
  bool same_ordering = false;        // argsort of both columns identical
};

std::vector<RewardTable> reward_table_compare(std::span<const double> gammas,
                                              std::span<const std::size_t> ks,
                                              const ServingCostModel& cost_model);

}  // namespace ppow
