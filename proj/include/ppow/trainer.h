// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ppow/adaw.h"
#include "ppow/models.h"
#include "ppow/rewards.h"
#include "ppow/specdec.h"

namespace ppow {

// `lr` defaults to 1e-2 for the small drafters here; large drafters want
// something near 5e-6.
struct TrainConfig {
  double eps_clip = 0.2;
  double kl_beta = 0.03;
  std::size_t group_size = 8;
  std::size_t window = 10;
  RewardConfig reward;
  double lr = 1e-2;
  double warmup_ratio = 0.05;
  double adv_delta = 1e-8;
  std::size_t total_steps = 5000;
  // Gradient steps per rollout group. Clipping only engages when > 1.
  std::size_t inner_epochs = 1;
  // false replaces divergence-aware selection with uniform window starts.
  bool adaw = true;
  WindowSampler sampler;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RolloutGroup {
  TokenSeq prefix;
  std::vector<SpeculativeWindow> windows;
  std::vector<VerificationOutcome> outcomes;
  std::vector<WindowReward> rewards;
  std::vector<double> advantages;
  // log pi_old(y_{i,t}) from the snapshot that drafted window i.
  std::vector<std::vector<double>> old_logprobs;
};

// (R_i - mean) / (population std + delta). Exactly zero when all rewards are
// equal.
std::vector<double> group_advantages(std::span<const double> rewards, double delta);

// Drafts cfg.group_size windows at temperature 1 from `snapshot`, verifies
// and rewards each. Window i uses rng.child(i).
RolloutGroup collect_rollout_group(const DrafterParameters& snapshot,
                                   const TargetAdapter& target,
                                   std::span<const TokenId> prefix,
                                   const TrainConfig& cfg, RngStream rng);

struct ObjectiveResult {
  double value = 0.0;
  double surrogate = 0.0;  // clipped term alone
  double kl_mean = 0.0;    // mean KL(pi_theta || pi_target) over drafted contexts
  double clip_fraction = 0.0;
  DrafterParameters gradient;  // dJ/dtheta
};

// J = 1/G sum_i 1/K sum_t [min(r A_i, clip(r, 1 - e, 1 + e) A_i)
//                          - beta KL(pi_theta(.|ctx_it) || pi_target(.|ctx_it))]
// with r = exp(log pi_theta(y_it) - old_logprob_it). All K positions share
// the window advantage.
ObjectiveResult ppow_objective(const RolloutGroup& group,
                               const DrafterParameters& current,
                               const TargetAdapter& target,
                               const TrainConfig& cfg);

struct StepMetrics {
  std::size_t step = 0;
  double lr = 0.0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double kl_mean = 0.0;
  double clip_fraction = 0.0;
  double tau_train = 0.0;
  double objective_value = 0.0;
  std::size_t window_start = 0;
  double wall_time = 0.0;  // seconds; the only non-deterministic field
};

std::string to_record(const StepMetrics& m);

// Mutable training state. The target and corpus are shared read-only.
struct TrainerState {
  DrafterParameters params;
  const TargetAdapter& target;
  const std::vector<TokenSeq>& corpus;
  std::size_t step = 0;
};

// Linear warmup over the first warmup_ratio * total_steps steps, then flat.
double scheduled_lr(const TrainConfig& cfg, std::size_t step);

// One PPOW update: pick a sequence, score its windows, choose a start,
// collect a rollout group there and ascend the objective.
StepMetrics train_step(TrainerState& state, const TrainConfig& cfg);

// One cross-entropy step on a random corpus prefix and a token sampled from
// the target after it. Returns the loss before the update.
double supervised_step(DrafterParameters& params, const TargetAdapter& target,
                       const std::vector<TokenSeq>& corpus, double lr, RngStream rng);

// Continued supervised training: supervised_step with the scheduled lr and
// RngStream(seed).child("cst").child(step).
double cst_step(TrainerState& state, const TrainConfig& cfg);

struct EvalOptions {
  std::size_t window = 10;
  std::size_t candidates = 1;
  double temperature = 1.0;
  std::size_t max_tokens = 128;
  double gamma = 0.12;
};

// Decodes every prompt (prompt i with rng.child(i)) and aggregates the stats.
DecodeStats evaluate(const DraftPolicy& drafter, const TargetAdapter& target,
                     const std::vector<TokenSeq>& prompts,
                     const EvalOptions& options, RngStream rng);

}  // namespace ppow
