// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/adaw.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace ppow {

double confidence(const ProbVector& p) {
  if (p.size() < 2) throw std::invalid_argument("confidence: |V| < 2");
  if (std::adjacent_find(p.begin(), p.end(), std::not_equal_to<>()) == p.end()) return 0.0;
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::clamp(1.0 - h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (p[y] > 0.0) kl += p[y] * (std::log(p[y]) - floored_log(q[y]));
  }
  return std::max(kl, 0.0);
}

CriticalityProfile criticality_profile(const TargetAdapter& target,
                                       const DraftPolicy& drafter,
                                       std::span<const TokenId> sequence) {
  if (sequence.size() < 2) throw std::invalid_argument("criticality_profile: length < 2");
  CriticalityProfile prof;
  const std::size_t n = sequence.size() - 1;
  prof.v.reserve(n);
  prof.c.reserve(n);
  prof.kl.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto ctx = sequence.first(t + 1);
    const ProbVector p = target.next_dist(ctx);
    const ProbVector q = drafter.next_dist(ctx);
    const double c = confidence(p);
    const double kl = kl_divergence(p, q);
    prof.c.push_back(c);
    prof.kl.push_back(kl);
    prof.v.push_back(c * kl);
  }
  return prof;
}

void write_profile_records(std::ostream& out, const CriticalityProfile& profile) {
  for (std::size_t t = 0; t < profile.size(); ++t) {
    nlohmann::ordered_json j;
    j["position"] = t;
    j["c"] = profile.c[t];
    j["kl"] = profile.kl[t];
    j["v"] = profile.v[t];
    out << j.dump() << "\n";
  }
}

WindowScores window_scores(const CriticalityProfile& profile, std::size_t K) {
  if (K < 1 || profile.size() < K) {
    throw std::invalid_argument("window_scores: profile shorter than K");
  }
  WindowScores ws;
  ws.window = K;
  const std::size_t starts = profile.size() - K + 1;
  ws.s.reserve(starts);
  for (std::size_t j = 0; j < starts; ++j) {
    double sum = 0.0;
    for (std::size_t t = j; t < j + K; ++t) sum += profile.v[t];
    ws.s.push_back(sum / static_cast<double>(K));
  }
  return ws;
}

void CurriculumSchedule::validate() const {
  if (steps.empty() || steps.front().first != 0.0) {
    throw std::invalid_argument("curriculum: first entry must start at progress 0");
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i].second >= 0.0 && steps[i].second <= 1.0)) {
      throw std::invalid_argument("curriculum: mix probability outside [0, 1]");
    }
    if (i > 0 && !(steps[i].first > steps[i - 1].first)) {
      throw std::invalid_argument("curriculum: progress fractions must increase");
    }
  }
}

double CurriculumSchedule::mix_at(double progress) const {
  double p = steps.front().second;
  for (const auto& [at, mix] : steps) {
    if (progress >= at) p = mix;
  }
  return p;
}

std::size_t sample_window_start(const WindowScores& scores, double progress,
                                const WindowSampler& sampler, RngStream& rng) {
  const auto& s = scores.s;
  if (s.empty()) throw std::invalid_argument("sample_window_start: no starts");
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw std::invalid_argument("sample_window_start: progress outside [0, 1]");
  }
  const double mix = sampler.schedule.mix_at(progress);
  const bool by_score = rng.uniform() <= mix;
  auto uniform_pick = [&](std::size_t n) {
    return std::min(static_cast<std::size_t>((1.0 - rng.uniform()) * static_cast<double>(n)),
                    n - 1);
  };
  if (!by_score) return uniform_pick(s.size());

  if (sampler.mode == CurriculumMode::kMix) {
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    if (!(total > 0.0)) return uniform_pick(s.size());
    return sample_categorical(s, rng);
  }

  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  const auto top = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(sampler.hard_quantile * static_cast<double>(s.size()))));
  return order[uniform_pick(std::min(top, s.size()))];
}

}  // namespace ppow
