// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "ppow/models.h"
#include "ppow/prob.h"
#include "ppow/rng.h"
#include "ppow/types.h"

namespace ppow {

// 1 - H(p) / log|V|, natural logs, 0 log 0 = 0. Clamped to [0, 1].
double confidence(const ProbVector& p);

// sum_y p(y) log(p(y) / q(y)) with 0 log(0 / q) = 0. q is floored at
// kProbFloor where p > 0.
double kl_divergence(const ProbVector& p, const ProbVector& q);

// Per-position criticality along a sequence. Entry t describes the
// prediction of sequence[t + 1] from sequence[0..t].
struct CriticalityProfile {
  std::vector<double> v;   // c * kl
  std::vector<double> c;   // C(P_t)
  std::vector<double> kl;  // KL(P_t || Q_t)

  std::size_t size() const { return v.size(); }
};

CriticalityProfile criticality_profile(const TargetAdapter& target,
                                       const DraftPolicy& drafter,
                                       std::span<const TokenId> sequence);

// One {position, c, kl, v} JSON record per line.
void write_profile_records(std::ostream& out, const CriticalityProfile& profile);

// s[j] is the mean of profile.v over [j, j + K - 1]. Start j covers the
// predictions of sequence[j + 1 .. j + K] from the prefix sequence[0..j].
struct WindowScores {
  std::vector<double> s;
  std::size_t window = 0;
};

WindowScores window_scores(const CriticalityProfile& profile, std::size_t K);

// Piecewise-constant probability of drawing an ADAW-selected window, keyed by
// training progress. The default ramps 0.2 / 0.4 / 0.6 at thirds.
struct CurriculumSchedule {
  std::vector<std::pair<double, double>> steps = {
      {0.0, 0.2}, {1.0 / 3.0, 0.4}, {2.0 / 3.0, 0.6}};

  // A schedule that always selects by score.
  static CurriculumSchedule constant(double p) { return {{{0.0, p}}}; }

  void validate() const;
  double mix_at(double progress) const;
};

enum class CurriculumMode {
  // With probability p draw j proportional to s_j, otherwise uniformly.
  kMix,
  // With probability p draw uniformly among the top `hard_quantile` fraction
  // of starts by score, otherwise uniformly over all starts.
  kQuantile,
};

struct WindowSampler {
  CurriculumSchedule schedule;
  CurriculumMode mode = CurriculumMode::kMix;
  double hard_quantile = 0.25;
};

// 0-based start index. All-zero scores fall back to uniform.
std::size_t sample_window_start(const WindowScores& scores, double progress,
                                const WindowSampler& sampler, RngStream& rng);

}  // namespace ppow
