// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/trainer.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <random>
#include <cmath>
#include <stdexcept>

namespace ppow {

void TrainConfig::validate() const {
  if (!(eps_clip > 0.0 && eps_clip < 1.0)) throw std::invalid_argument("eps_clip must be in (0, 1)");
  if (!(kl_beta >= 0.0)) throw std::invalid_argument("kl_beta must be >= 0");
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (!(lr >= 0.0)) throw std::invalid_argument("lr must be >= 0");
  if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) {
    throw std::invalid_argument("warmup_ratio must be in [0, 1]");
  }
  if (!(adv_delta > 0.0)) throw std::invalid_argument("adv_delta must be > 0");
  if (inner_epochs < 1) throw std::invalid_argument("inner_epochs must be >= 1");
  if (!(sampler.hard_quantile > 0.0 && sampler.hard_quantile <= 1.0)) {
    throw std::invalid_argument("hard_quantile must be in (0, 1]");
  }
  reward.validate();
  sampler.schedule.validate();
}

std::vector<double> group_advantages(std::span<const double> rewards, double delta) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  if (n == 0) return adv;
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); })) {
    return adv;
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sigma = std::sqrt(var / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / (sigma + delta);
  return adv;
}

namespace {

const TargetAdapter* feature_source_for(const DrafterParameters& params,
                                        const TargetAdapter& target) {
  return params.shape().feature > 0 ? &target : nullptr;
}

}  // namespace

RolloutGroup collect_rollout_group(const DrafterParameters& snapshot,
                                   const TargetAdapter& target,
                                   std::span<const TokenId> prefix,
                                   const TrainConfig& cfg, RngStream rng) {
  NeuralDrafter drafter(snapshot, feature_source_for(snapshot, target));
  RolloutGroup g;
  g.prefix.assign(prefix.begin(), prefix.end());
  std::vector<double> totals;
  for (std::size_t i = 0; i < cfg.group_size; ++i) {
    RngStream wr = rng.child(i);
    SpeculativeWindow w = draft_window(drafter, prefix, cfg.window, 1.0, wr.child("draft"));
    VerificationOutcome o = verify_window(w, target, prefix, wr.child("verify"));
    WindowReward r = total_reward(o, w, target, prefix, cfg.reward);
    totals.push_back(r.total);
    g.old_logprobs.push_back(w.draft_logprobs);
    g.windows.push_back(std::move(w));
    g.outcomes.push_back(std::move(o));
    g.rewards.push_back(r);
  }
  g.advantages = group_advantages(totals, cfg.adv_delta);
  return g;
}

ObjectiveResult ppow_objective(const RolloutGroup& group,
                               const DrafterParameters& current,
                               const TargetAdapter& target,
                               const TrainConfig& cfg) {
  ObjectiveResult res{.gradient = DrafterParameters(current.shape())};
  NeuralDrafter drafter(current, feature_source_for(current, target));
  const std::size_t G = group.windows.size();
  if (G == 0) return res;

  std::size_t terms = 0, clipped = 0;
  double kl_sum = 0.0;
  std::vector<double> upstream(current.shape().vocab);
  std::vector<double> logq(current.shape().vocab);
  for (std::size_t i = 0; i < G; ++i) {
    const SpeculativeWindow& w = group.windows[i];
    const std::size_t K = w.size();
    const double weight = 1.0 / (static_cast<double>(G) * static_cast<double>(K));
    const double adv = group.advantages[i];
    TokenSeq ctx = group.prefix;
    for (std::size_t t = 0; t < K; ++t) {
      const TokenId y = w.tokens[t];
      const DrafterOutput out = drafter.forward(ctx, group.prefix.size());
      const ProbVector p = target.next_dist(ctx);
      const ProbVector& q = out.dist;

      const double ratio = std::exp(q.log_prob(y) - group.old_logprobs[i][t]);
      const double unclipped = ratio * adv;
      const double clipped_term =
          std::clamp(ratio, 1.0 - cfg.eps_clip, 1.0 + cfg.eps_clip) * adv;
      const bool ratio_active = unclipped <= clipped_term;
      const double surrogate = ratio_active ? unclipped : clipped_term;
      if (!ratio_active) ++clipped;

      double kl = 0.0;
      for (std::size_t v = 0; v < q.size(); ++v) {
        logq[v] = q.log_prob(static_cast<TokenId>(v));
        kl += q[v] * (logq[v] - p.log_prob(static_cast<TokenId>(v)));
      }

      // d/dlogits of ratio * A is ratio * A * (onehot(y) - q); of KL(q||p)
      // it is q * (log q - log p - KL).
      const double g_ratio = ratio_active ? unclipped : 0.0;
      for (std::size_t v = 0; v < q.size(); ++v) {
        const double onehot = (v == y) ? 1.0 : 0.0;
        upstream[v] = weight * (g_ratio * (onehot - q[v]) -
                                cfg.kl_beta * q[v] *
                                    (logq[v] - p.log_prob(static_cast<TokenId>(v)) - kl));
      }
      accumulate_backward(current, out, upstream, res.gradient);

      res.surrogate += weight * surrogate;
      res.value += weight * (surrogate - cfg.kl_beta * kl);
      kl_sum += kl;
      ++terms;
      ctx.push_back(y);
    }
  }
  res.kl_mean = kl_sum / static_cast<double>(terms);
  res.clip_fraction = static_cast<double>(clipped) / static_cast<double>(terms);
  return res;
}

std::string to_record(const StepMetrics& m) {
  nlohmann::ordered_json j;
  j["step"] = m.step;
  j["lr"] = m.lr;
  j["reward_mean"] = m.reward_mean;
  j["reward_std"] = m.reward_std;
  j["kl_mean"] = m.kl_mean;
  j["clip_fraction"] = m.clip_fraction;
  j["tau_train"] = m.tau_train;
  j["objective_value"] = m.objective_value;
  j["window_start"] = m.window_start;
  j["wall_time"] = m.wall_time;
  return j.dump();
}

double scheduled_lr(const TrainConfig& cfg, std::size_t step) {
  const double warm = cfg.warmup_ratio * static_cast<double>(cfg.total_steps);
  if (warm <= 0.0) return cfg.lr;
  return cfg.lr * std::min(1.0, static_cast<double>(step + 1) / warm);
}

namespace {

std::size_t pick_sequence(const std::vector<TokenSeq>& corpus, std::size_t min_len,
                          RngStream& rng) {
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");
  std::uniform_int_distribution<std::size_t> any(0, corpus.size() - 1);
  for (int attempt = 0; attempt < 32; ++attempt) {
    const std::size_t i = any(rng);
    if (corpus[i].size() >= min_len) return i;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].size() >= min_len) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw std::invalid_argument("no training sequence has length >= " + std::to_string(min_len));
  }
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  return eligible[pick(rng)];
}

}  // namespace

StepMetrics train_step(TrainerState& state, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng = RngStream(cfg.seed).child("ppow").child(state.step);
  RngStream select = rng.child("select");

  const TokenSeq& seq = state.corpus[pick_sequence(state.corpus, cfg.window + 2, select)];
  const std::size_t starts = seq.size() - cfg.window;  // profile length - K + 1

  std::size_t start = 0;
  if (cfg.adaw) {
    NeuralDrafter current(state.params, feature_source_for(state.params, state.target));
    const CriticalityProfile prof = criticality_profile(state.target, current, seq);
    const WindowScores scores = window_scores(prof, cfg.window);
    const double progress =
        cfg.total_steps ? std::min(1.0, static_cast<double>(state.step) /
                                            static_cast<double>(cfg.total_steps))
                        : 1.0;
    start = sample_window_start(scores, progress, cfg.sampler, select);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, starts - 1);
    start = pick(select);
  }

  const std::span<const TokenId> prefix(seq.data(), start + 1);
  const DrafterParameters snapshot = state.params;
  const RolloutGroup group =
      collect_rollout_group(snapshot, state.target, prefix, cfg, rng.child("rollout"));

  StepMetrics m;
  m.step = state.step;
  m.lr = scheduled_lr(cfg, state.step);
  m.window_start = start;
  double mean = 0.0, k_sum = 0.0;
  for (std::size_t i = 0; i < group.rewards.size(); ++i) {
    mean += group.rewards[i].total;
    k_sum += static_cast<double>(group.rewards[i].k);
  }
  mean /= static_cast<double>(group.rewards.size());
  double var = 0.0;
  for (const auto& r : group.rewards) var += (r.total - mean) * (r.total - mean);
  m.reward_mean = mean;
  m.reward_std = std::sqrt(var / static_cast<double>(group.rewards.size()));
  m.tau_train = k_sum / static_cast<double>(group.rewards.size());

  double clip_sum = 0.0;
  for (std::size_t e = 0; e < cfg.inner_epochs; ++e) {
    ObjectiveResult obj = ppow_objective(group, state.params, state.target, cfg);
    if (e == 0) {
      m.objective_value = obj.value;
      m.kl_mean = obj.kl_mean;
    }
    clip_sum += obj.clip_fraction;
    if (m.lr > 0.0) state.params.add_scaled(obj.gradient, m.lr);
  }
  m.clip_fraction = clip_sum / static_cast<double>(cfg.inner_epochs);
  ++state.step;
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

double supervised_step(DrafterParameters& params, const TargetAdapter& target,
                       const std::vector<TokenSeq>& corpus, double lr, RngStream rng) {
  const TokenSeq& seq = corpus[pick_sequence(corpus, 2, rng)];
  std::uniform_int_distribution<std::size_t> pos(1, seq.size() - 1);
  const std::span<const TokenId> prefix(seq.data(), pos(rng));
  const TokenId token = sample(target.next_dist(prefix), rng);
  return sft_step(params, feature_source_for(params, target), prefix, token, lr);
}

double cst_step(TrainerState& state, const TrainConfig& cfg) {
  const double loss =
      supervised_step(state.params, state.target, state.corpus, scheduled_lr(cfg, state.step),
                      RngStream(cfg.seed).child("cst").child(state.step));
  ++state.step;
  return loss;
}

DecodeStats evaluate(const DraftPolicy& drafter, const TargetAdapter& target,
                     const std::vector<TokenSeq>& prompts,
                     const EvalOptions& options, RngStream rng) {
  if (prompts.empty()) throw std::invalid_argument("evaluate: no prompts");
  DecodeStats agg;
  agg.window = options.window;
  agg.candidates = options.candidates;
  agg.temperature = options.temperature;
  agg.seed = rng.seed();
  const GenerateOptions gen{options.window, options.candidates, options.temperature,
                            options.gamma};
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    agg.merge(generate(drafter, target, prompts[i], options.max_tokens, gen, rng.child(i)).stats);
  }
  return agg;
}

}  // namespace ppow
