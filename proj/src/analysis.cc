// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/analysis.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ppow/adaw.h"
#include "ppow/rewards.h"
#include "ppow/specdec.h"

namespace ppow {

namespace {

void check_pair(const DistPair& pair) {
  if (pair.p.size() != pair.q.size()) throw std::invalid_argument("DistPair: size mismatch");
}

}  // namespace

ProbVector random_simplex(std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("random_simplex: n must be >= 1");
  std::vector<double> w(n);
  for (double& v : w) v = -std::log(rng.uniform());
  return ProbVector::normalized(std::move(w));
}

double total_variation(const DistPair& pair) {
  check_pair(pair);
  double s = 0.0;
  for (std::size_t y = 0; y < pair.p.size(); ++y) s += std::abs(pair.p[y] - pair.q[y]);
  return 0.5 * s;
}

double acceptance_probability(const DistPair& pair) {
  check_pair(pair);
  double s = 0.0;
  for (std::size_t y = 0; y < pair.p.size(); ++y) s += std::min(pair.p[y], pair.q[y]);
  return s;
}

PinskerResult pinsker_check(const DistPair& pair) {
  PinskerResult r;
  r.alpha = acceptance_probability(pair);
  r.lower_bound = 1.0 - std::sqrt(kl_divergence(pair.p, pair.q) / 2.0);
  r.holds = r.alpha >= r.lower_bound - 1e-12;
  return r;
}

double monte_carlo_acceptance(const DistPair& pair, std::size_t trials, RngStream& rng) {
  check_pair(pair);
  if (trials < 1) throw std::invalid_argument("monte_carlo_acceptance: trials < 1");
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const TokenId y = sample(pair.q, rng);
    if (rng.uniform() <= std::min(1.0, pair.p[y] / pair.q[y])) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(trials);
}

NablaRecord nabla_metric(double target_logprob, double draft_logprob) {
  if (!std::isfinite(target_logprob) || !std::isfinite(draft_logprob)) {
    throw std::invalid_argument("nabla_metric: non-finite log-probability");
  }
  NablaRecord r;
  r.delta = target_logprob - draft_logprob;
  r.nabla = std::max(0.0, std::expm1(r.delta) - r.delta);
  return r;
}

EasyHardPartition easy_hard_partition(const DraftPolicy& baseline,
                                      const TargetAdapter& target,
                                      const std::vector<TokenSeq>& prefixes,
                                      std::size_t K, RngStream rng) {
  EasyHardPartition part;
  std::vector<double> easy_nabla, hard_nabla;
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    RngStream wr = rng.child(i);
    const SpeculativeWindow w = draft_window(baseline, prefixes[i], K, 1.0, wr.child("draft"));
    const VerificationOutcome o = verify_window(w, target, prefixes[i], wr.child("verify"));
    const bool easy = o.accepted_len == K;
    WindowSet& set = easy ? part.easy : part.hard;
    auto& nablas = easy ? easy_nabla : hard_nabla;
    set.members.push_back(i);
    set.ks.push_back(o.accepted_len);
    TokenSeq ctx = prefixes[i];
    for (std::size_t t = 0; t < K; ++t) {
      const double tlp = target.next_dist(ctx).log_prob(w.tokens[t]);
      nablas.push_back(nabla_metric(tlp, w.draft_logprobs[t]).nabla);
      ctx.push_back(w.tokens[t]);
    }
  }
  auto finish = [](WindowSet& set, const std::vector<double>& nablas) {
    if (set.ks.empty()) return;
    double ksum = 0.0;
    for (std::size_t k : set.ks) ksum += static_cast<double>(k);
    set.tau = ksum / static_cast<double>(set.ks.size());
    set.nabla = std::accumulate(nablas.begin(), nablas.end(), 0.0) /
                static_cast<double>(nablas.size());
  };
  finish(part.easy, easy_nabla);
  finish(part.hard, hard_nabla);
  return part;
}

namespace {

bool non_decreasing(const std::vector<double>& v) {
  return std::is_sorted(v.begin(), v.end());
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace

std::vector<RewardTable> reward_table_compare(std::span<const double> gammas,
                                              std::span<const std::size_t> ks,
                                              const ServingCostModel& cm) {
  if (gammas.empty() || ks.empty()) {
    throw std::invalid_argument("reward_table_compare: empty gamma or k list");
  }
  std::vector<std::size_t> sorted_ks(ks.begin(), ks.end());
  std::sort(sorted_ks.begin(), sorted_ks.end());
  std::vector<RewardTable> tables;
  for (double gamma : gammas) {
    RewardTable t;
    t.gamma = gamma;
    std::vector<double> measured, cost_aware;
    for (std::size_t k : sorted_ks) {
      const double kd = static_cast<double>(k);
      RewardRow row;
      row.k = k;
      row.measured = kd * cm.verify_cost / (kd * cm.draft_token_cost + cm.verify_cost + cm.overhead);
      row.cost_aware = speedup_reward(k, gamma);
      measured.push_back(row.measured);
      cost_aware.push_back(row.cost_aware);
      t.rows.push_back(row);
    }
    t.measured_monotone = non_decreasing(measured);
    t.cost_aware_monotone = non_decreasing(cost_aware);
    t.same_ordering = argsort(measured) == argsort(cost_aware);
    tables.push_back(std::move(t));
  }
  return tables;
}

}  // namespace ppow
