// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/specdec.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ppow {

namespace {

ProbVector proposal(const ProbVector& q, double temperature) {
  if (temperature == 1.0) return q;
  if (temperature == 0.0) return ProbVector::one_hot(q.size(), q.argmax());
  // q^(1/T) renormalized, computed in log space.
  std::vector<double> logits(q.size());
  for (std::size_t y = 0; y < q.size(); ++y) {
    logits[y] = q[y] > 0.0 ? std::log(q[y]) / temperature
                           : -std::numeric_limits<double>::infinity();
  }
  double mx = *std::max_element(logits.begin(), logits.end());
  for (double& l : logits) l = std::exp(l - mx);
  return ProbVector::normalized(std::move(logits));
}

}  // namespace

void DecodeStats::merge(const DecodeStats& other) {
  total_tokens += other.total_tokens;
  num_steps += other.num_steps;
  accepted_tokens += other.accepted_tokens;
  cost_units += other.cost_units;
  finalize();
}

void DecodeStats::finalize() {
  tau = num_steps ? static_cast<double>(accepted_tokens) / static_cast<double>(num_steps) : 0.0;
  speedup_cost_model = cost_units > 0.0 ? static_cast<double>(total_tokens) / cost_units : 0.0;
}

std::string to_record(const DecodeStats& s) {
  nlohmann::ordered_json j;
  j["tokens"] = s.total_tokens;
  j["steps"] = s.num_steps;
  j["tau"] = s.tau;
  j["cost_units"] = s.cost_units;
  j["speedup"] = s.speedup_cost_model;
  j["K"] = s.window;
  j["G"] = s.candidates;
  j["temperature"] = s.temperature;
  j["seed"] = s.seed;
  return j.dump();
}

SpeculativeWindow draft_window(const DraftPolicy& drafter,
                               std::span<const TokenId> prefix, std::size_t K,
                               double temperature, RngStream rng) {
  if (K < 1) throw std::invalid_argument("draft_window: K must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("draft_window: temperature < 0");
  SpeculativeWindow w;
  w.tokens.reserve(K);
  TokenSeq ctx(prefix.begin(), prefix.end());
  for (std::size_t t = 0; t < K; ++t) {
    ProbVector q = proposal(drafter.window_dist(ctx, prefix.size()), temperature);
    TokenId y = sample(q, rng);
    w.draft_logprobs.push_back(q.log_prob(y));
    w.tokens.push_back(y);
    w.draft_probs.push_back(std::move(q));
    ctx.push_back(y);
  }
  return w;
}

VerificationOutcome verify_window(const SpeculativeWindow& window,
                                  const TargetAdapter& target,
                                  std::span<const TokenId> prefix,
                                  RngStream rng) {
  const std::size_t K = window.size();
  VerificationOutcome out;
  TokenSeq ctx(prefix.begin(), prefix.end());
  RngStream resample = rng.child("resample");
  for (std::size_t t = 0; t < K; ++t) {
    const ProbVector p = target.next_dist(ctx);
    const ProbVector& q = window.draft_probs[t];
    const TokenId y = window.tokens[t];
    const double alpha = std::min(1.0, p[y] / q[y]);
    out.alphas.push_back(alpha);
    if (rng.child(t).uniform() <= alpha) {
      out.committed.push_back(y);
      ctx.push_back(y);
      ++out.accepted_len;
      continue;
    }
    std::vector<double> residual(p.size());
    double mass = 0.0;
    for (std::size_t v = 0; v < p.size(); ++v) {
      residual[v] = std::max(p[v] - q[v], 0.0);
      mass += residual[v];
    }
    if (!(mass > 0.0)) {
      throw std::logic_error("verify_window: rejection with an empty residual");
    }
    out.rejected_at = t;
    out.committed.push_back(sample_categorical(residual, resample));
    return out;
  }
  out.committed.push_back(sample(target.next_dist(ctx), resample));
  return out;
}

VerificationOutcome multi_candidate_step(const DraftPolicy& drafter,
                                         const TargetAdapter& target,
                                         std::span<const TokenId> prefix,
                                         std::size_t K, std::size_t G,
                                         double temperature, RngStream rng) {
  if (G < 1) throw std::invalid_argument("multi_candidate_step: G must be >= 1");
  VerificationOutcome best;
  for (std::size_t g = 0; g < G; ++g) {
    RngStream cand = rng.child(g);
    SpeculativeWindow w = draft_window(drafter, prefix, K, temperature, cand.child("draft"));
    VerificationOutcome o = verify_window(w, target, prefix, cand.child("verify"));
    o.candidate = g;
    if (g == 0 || o.accepted_len > best.accepted_len) best = std::move(o);
  }
  return best;
}

GenerateResult generate(const DraftPolicy& drafter, const TargetAdapter& target,
                        std::span<const TokenId> prompt, std::size_t max_tokens,
                        const GenerateOptions& options, RngStream rng) {
  if (max_tokens < 1) throw std::invalid_argument("generate: max_tokens must be >= 1");
  if (prompt.empty()) throw std::invalid_argument("generate: empty prompt");

  std::size_t horizon = 0;
  if (drafter.context_horizon() > 0 && target.context_horizon() > 0) {
    horizon = std::max(drafter.context_horizon(), target.context_horizon());
  }

  GenerateResult result;
  DecodeStats& st = result.stats;
  st.window = options.window;
  st.candidates = options.candidates;
  st.temperature = options.temperature;
  st.seed = rng.seed();

  TokenSeq buffer(prompt.begin(), prompt.end());
  const double step_cost = static_cast<double>(options.window) * options.gamma + 1.0;
  while (result.tokens.size() < max_tokens) {
    std::span<const TokenId> ctx(buffer);
    if (horizon > 0 && ctx.size() > horizon) ctx = ctx.last(horizon);
    VerificationOutcome o =
        multi_candidate_step(drafter, target, ctx, options.window,
                             options.candidates, options.temperature,
                             rng.child(st.num_steps));
    buffer.insert(buffer.end(), o.committed.begin(), o.committed.end());
    result.tokens.insert(result.tokens.end(), o.committed.begin(), o.committed.end());
    st.accepted_tokens += o.accepted_len;
    st.total_tokens += o.committed.size();
    st.cost_units += step_cost;
    ++st.num_steps;
  }
  st.finalize();
  return result;
}

double cost_model_speedup(const DecodeStats& stats, double gamma) {
  if (stats.num_steps == 0) throw std::invalid_argument("cost_model_speedup: zero steps");
  const double cost = static_cast<double>(stats.num_steps) *
                      (static_cast<double>(stats.window) * gamma + 1.0);
  return static_cast<double>(stats.total_tokens) / cost;
}

}  // namespace ppow
