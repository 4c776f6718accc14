// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppow/models.h"
#include "ppow/prob.h"
#include "ppow/rng.h"
#include "ppow/types.h"

namespace ppow {

// K drafted tokens with the proposal distribution each was sampled from.
// draft_logprobs[t] == log(draft_probs[t][tokens[t]]).
struct SpeculativeWindow {
  TokenSeq tokens;
  std::vector<ProbVector> draft_probs;
  std::vector<double> draft_logprobs;

  std::size_t size() const { return tokens.size(); }
};

struct VerificationOutcome {
  std::size_t accepted_len = 0;
  // alphas[t] for every position that was tested: min(k + 1, K) entries.
  std::vector<double> alphas;
  // The accepted prefix followed by one target-sampled token: a residual
  // correction on rejection, or the bonus token after full acceptance.
  TokenSeq committed;
  std::optional<std::size_t> rejected_at;
  // Index of the committed candidate in multi-candidate steps.
  std::size_t candidate = 0;
};

struct DecodeStats {
  std::size_t total_tokens = 0;
  std::size_t num_steps = 0;
  std::size_t accepted_tokens = 0;  // sum of k over steps
  double tau = 0.0;                 // accepted_tokens / num_steps
  double cost_units = 0.0;          // sum over steps of (K * gamma + 1)
  double speedup_cost_model = 0.0;  // total_tokens / cost_units
  std::size_t window = 0;
  std::size_t candidates = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  // Folds another run into this one and recomputes the derived ratios.
  void merge(const DecodeStats& other);
  void finalize();
};

// One JSON object per line: tokens, steps, tau, cost_units, speedup, K, G,
// temperature, seed.
std::string to_record(const DecodeStats& stats);

// Samples K tokens autoregressively from the drafter. With temperature T the
// proposal is softmax(log Q / T); T == 0 is greedy (one-hot on argmax Q, lowest
// id on ties). The proposal actually sampled from is what gets recorded, so
// verification preserves the target distribution at every temperature; at
// T == 1 it is exactly Q.
SpeculativeWindow draft_window(const DraftPolicy& drafter,
                               std::span<const TokenId> prefix, std::size_t K,
                               double temperature, RngStream rng);

// Rejection-sampling verification. Position t draws u_t from
// rng.child(t) and accepts while u_t <= min(1, P_t(y_t) / Q_t(y_t)). On the
// first rejection the correction is drawn from normalize(max(P - Q, 0)); after
// full acceptance a bonus token is drawn from P_{K+1}. Both draws use
// rng.child("resample").
VerificationOutcome verify_window(const SpeculativeWindow& window,
                                  const TargetAdapter& target,
                                  std::span<const TokenId> prefix,
                                  RngStream rng);

// Drafts G independent chains (candidate g uses rng.child(g).child("draft")
// and rng.child(g).child("verify")) and commits the one with the longest
// accepted prefix, lowest index on ties. Only G == 1 preserves the target
// distribution.
VerificationOutcome multi_candidate_step(const DraftPolicy& drafter,
                                         const TargetAdapter& target,
                                         std::span<const TokenId> prefix,
                                         std::size_t K, std::size_t G,
                                         double temperature, RngStream rng);

struct GenerateOptions {
  std::size_t window = 10;
  std::size_t candidates = 1;
  double temperature = 1.0;
  double gamma = 0.12;
};

struct GenerateResult {
  TokenSeq tokens;  // generated tokens only, excluding the prompt
  DecodeStats stats;
};

// Repeats draft + verify until at least `max_tokens` tokens are committed.
// The final step may overshoot by up to K tokens; all committed tokens are
// returned and counted. Step s uses rng.child(s).
GenerateResult generate(const DraftPolicy& drafter, const TargetAdapter& target,
                        std::span<const TokenId> prompt, std::size_t max_tokens,
                        const GenerateOptions& options, RngStream rng);

// total_tokens / sum over steps of (K * gamma + 1). Vanilla decoding costs one
// unit per token, so this is the speedup under the cost model.
double cost_model_speedup(const DecodeStats& stats, double gamma);

}  // namespace ppow
