// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/analysis.h"

#include <gtest/gtest.h>

#include <cmath>

#include "ppow/adaw.h"
#include "ppow/corpus.h"

namespace ppow {
namespace {

const DistPair kHand{ProbVector({0.9, 0.1}), ProbVector({0.6, 0.4})};

// Puts no mass on the target's argmax in any context.
class AvoidArgmax final : public DraftPolicy {
 public:
  explicit AvoidArgmax(const TargetAdapter& t) : t_(t) {}
  std::size_t vocab_size() const override { return t_.vocab_size(); }
  ProbVector next_dist(std::span<const TokenId> ctx) const override {
    const ProbVector p = t_.next_dist(ctx);
    std::vector<double> w(p.begin(), p.end());
    w[p.argmax()] = 0.0;
    return ProbVector::normalized(std::move(w));
  }

 private:
  const TargetAdapter& t_;
};

TEST(RandomSimplex, ValidAndUnbiased) {
  RngStream rng(1);
  std::vector<double> mean(4, 0.0);
  for (int i = 0; i < 20000; ++i) {
    const ProbVector p = random_simplex(4, rng);
    for (std::size_t j = 0; j < 4; ++j) mean[j] += p[j] / 20000.0;
  }
  // Dirichlet(1): each coordinate has mean 1/4 and variance 3/80.
  for (double m : mean) EXPECT_LT(std::abs(m - 0.25), 4.0 * std::sqrt(3.0 / 80.0 / 20000.0));
  EXPECT_THROW(random_simplex(0, rng), std::invalid_argument);
}

TEST(TotalVariation, HandValues) {
  EXPECT_EQ(total_variation({ProbVector({0.3, 0.7}), ProbVector({0.3, 0.7})}), 0.0);
  EXPECT_EQ(total_variation({ProbVector::one_hot(3, 0), ProbVector::one_hot(3, 2)}), 1.0);
  EXPECT_NEAR(total_variation(kHand), 0.3, 1e-15);
  EXPECT_THROW(total_variation({ProbVector::uniform(2), ProbVector::uniform(3)}),
               std::invalid_argument);
}

TEST(AcceptanceProbability, HandValues) {
  EXPECT_NEAR(acceptance_probability({ProbVector({0.3, 0.7}), ProbVector({0.3, 0.7})}), 1.0,
              1e-15);
  EXPECT_NEAR(acceptance_probability(kHand), 0.7, 1e-15);
}

TEST(AcceptanceProbability, OneMinusTotalVariation) {
  RngStream rng(2);
  for (std::size_t n : {2u, 8u, 64u}) {
    for (int i = 0; i < 10000; ++i) {
      const DistPair pair{random_simplex(n, rng), random_simplex(n, rng)};
      EXPECT_NEAR(acceptance_probability(pair), 1.0 - total_variation(pair), 1e-12);
    }
  }
}

TEST(Pinsker, HandValues) {
  const PinskerResult same = pinsker_check({ProbVector({0.3, 0.7}), ProbVector({0.3, 0.7})});
  EXPECT_NEAR(same.alpha, 1.0, 1e-15);
  EXPECT_NEAR(same.lower_bound, 1.0, 1e-15);
  EXPECT_TRUE(same.holds);

  const PinskerResult r = pinsker_check(kHand);
  EXPECT_NEAR(r.alpha, 0.7, 1e-15);
  EXPECT_NEAR(r.lower_bound, 1.0 - std::sqrt(0.22629 / 2.0), 1e-5);
  EXPECT_NEAR(r.lower_bound, 0.6636, 1e-4);
  EXPECT_TRUE(r.holds);
}

TEST(Pinsker, NeverViolated) {
  RngStream rng(3);
  for (std::size_t n : {2u, 8u, 64u}) {
    for (int i = 0; i < 10000; ++i) {
      const PinskerResult r = pinsker_check({random_simplex(n, rng), random_simplex(n, rng)});
      EXPECT_TRUE(r.holds) << r.alpha << " " << r.lower_bound;
    }
  }
}

TEST(MonteCarloAcceptance, ExactCases) {
  RngStream rng(4);
  EXPECT_EQ(monte_carlo_acceptance({ProbVector({0.2, 0.8}), ProbVector({0.2, 0.8})}, 1000, rng),
            1.0);
  EXPECT_EQ(monte_carlo_acceptance({ProbVector::one_hot(3, 0), ProbVector::one_hot(3, 1)}, 1000,
                                   rng),
            0.0);
}

TEST(MonteCarloAcceptance, WithinBinomialBounds) {
  RngStream rng(5);
  const std::size_t n = 100000;
  EXPECT_LT(std::abs(monte_carlo_acceptance(kHand, n, rng) - 0.7),
            3.0 * std::sqrt(0.7 * 0.3 / n));
  for (int i = 0; i < 20; ++i) {
    const DistPair pair{random_simplex(8, rng), random_simplex(8, rng)};
    const double a = acceptance_probability(pair);
    EXPECT_LT(std::abs(monte_carlo_acceptance(pair, n, rng) - a),
              3.5 * std::sqrt(a * (1 - a) / n));
  }
}

TEST(Nabla, HandValues) {
  EXPECT_EQ(nabla_metric(-1.0, -1.0).nabla, 0.0);
  EXPECT_NEAR(nabla_metric(0.0, -1.0).nabla, 0.71828, 1e-5);
  EXPECT_NEAR(nabla_metric(-1.0, 0.0).nabla, 0.36788, 1e-5);
  EXPECT_EQ(nabla_metric(-0.5, -2.0).delta, 1.5);
  EXPECT_THROW(nabla_metric(std::nan(""), 0.0), std::invalid_argument);
  EXPECT_THROW(nabla_metric(0.0, -std::numeric_limits<double>::infinity()),
               std::invalid_argument);
}

TEST(Nabla, NonNegativeWithEqualityOnlyAtZero) {
  for (int i = -2000; i <= 2000; ++i) {
    const double d = i / 100.0;
    const double v = nabla_metric(d, 0.0).nabla;
    EXPECT_GE(v, 0.0) << d;
    if (i == 0) {
      EXPECT_EQ(v, 0.0);
    } else {
      EXPECT_GT(v, 1e-12) << d;
    }
  }
}

TEST(EasyHard, PerfectDrafterIsAllEasy) {
  const GrammarSpec g = random_grammar(5, 3, {}, 6);
  const auto corpus = sample_grammar_corpus(g, 40, 20, 7);
  const TabularTarget t = TabularTarget::fit(corpus, 5, 3, 0.01);
  const TargetDrafter d(t);
  std::vector<TokenSeq> prefixes(corpus.begin(), corpus.begin() + 30);
  const EasyHardPartition part = easy_hard_partition(d, t, prefixes, 6, RngStream(1));
  EXPECT_EQ(part.easy.members.size(), 30u);
  EXPECT_TRUE(part.hard.members.empty());
  EXPECT_EQ(part.easy.tau, 6.0);
  EXPECT_NEAR(part.easy.nabla, 0.0, 1e-12);
}

TEST(EasyHard, AdversarialDrafterHasHardWindows) {
  const GrammarSpec g = random_grammar(5, 3, {}, 6);
  const auto corpus = sample_grammar_corpus(g, 100, 12, 8);
  const TabularTarget t = TabularTarget::fit(corpus, 5, 3, 0.01);
  const AvoidArgmax d(t);
  const EasyHardPartition part = easy_hard_partition(d, t, corpus, 5, RngStream(2));
  EXPECT_EQ(part.easy.members.size() + part.hard.members.size(), 100u);
  EXPECT_FALSE(part.hard.members.empty());
  EXPECT_LT(part.hard.tau, 5.0);
  EXPECT_GT(part.hard.nabla, 0.0);
  for (const WindowSet* set : {&part.easy, &part.hard}) {
    ASSERT_EQ(set->ks.size(), set->members.size());
    if (set->ks.empty()) continue;
    double sum = 0.0;
    for (std::size_t k : set->ks) sum += static_cast<double>(k);
    EXPECT_EQ(set->tau, sum / static_cast<double>(set->ks.size()));
  }
}

TEST(EasyHard, Deterministic) {
  const GrammarSpec g = random_grammar(5, 3, {}, 6);
  const auto corpus = sample_grammar_corpus(g, 50, 12, 9);
  const TabularTarget t = TabularTarget::fit(corpus, 5, 3, 0.01);
  const AvoidArgmax d(t);
  const auto a = easy_hard_partition(d, t, corpus, 4, RngStream(3));
  const auto b = easy_hard_partition(d, t, corpus, 4, RngStream(3));
  EXPECT_EQ(a.hard.members, b.hard.members);
  EXPECT_EQ(a.hard.ks, b.hard.ks);
  EXPECT_EQ(a.hard.nabla, b.hard.nabla);
}

TEST(RewardTable, ReferenceColumnAtOneEighth) {
  const double reference[] = {0.89, 1.60, 2.18, 2.67, 3.08, 3.43, 3.74};
  const std::vector<double> gammas{0.125};
  const std::vector<std::size_t> ks{0, 1, 2, 3, 4, 5, 6, 7};
  const auto tables = reward_table_compare(gammas, ks, {});
  ASSERT_EQ(tables.size(), 1u);
  ASSERT_EQ(tables[0].rows.size(), 8u);
  EXPECT_EQ(tables[0].rows[0].cost_aware, 0.0);
  EXPECT_EQ(tables[0].rows[0].measured, 0.0);
  for (std::size_t k = 1; k <= 7; ++k) {
    EXPECT_NEAR(tables[0].rows[k].cost_aware, reference[k - 1], 0.01) << k;
  }
}

TEST(RewardTable, MonotoneAndSameOrdering) {
  const std::vector<double> gammas{0.12, 0.125, 0.5};
  const std::vector<std::size_t> ks{7, 3, 0, 1, 2, 5, 4, 6};
  for (const RewardTable& t : reward_table_compare(gammas, ks, {})) {
    EXPECT_TRUE(t.cost_aware_monotone);
    EXPECT_TRUE(t.measured_monotone);
    EXPECT_TRUE(t.same_ordering);
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
      EXPECT_GT(t.rows[i].cost_aware, t.rows[i - 1].cost_aware);
      EXPECT_GT(t.rows[i].measured, t.rows[i - 1].measured);
    }
  }
}

TEST(RewardTable, MeasuredColumnFormula) {
  const ServingCostModel cm{0.3, 1.0, 0.2};
  const std::vector<double> gammas{0.12};
  const std::vector<std::size_t> ks{4};
  const auto t = reward_table_compare(gammas, ks, cm);
  EXPECT_NEAR(t[0].rows[0].measured, 4.0 / (1.2 + 1.0 + 0.2), 1e-15);
  EXPECT_NEAR(t[0].rows[0].cost_aware, 4.0 / 1.48, 1e-15);
}

}  // namespace
}  // namespace ppow
