// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/rng.h"

#include <gtest/gtest.h>

#include <random>
#include <set>

namespace ppow {
namespace {

TEST(RngStream, SameSeedSameSequence) {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(RngStream, ChildrenIgnoreParentPosition) {
  RngStream a(7), b(7);
  for (int i = 0; i < 13; ++i) b();
  EXPECT_EQ(a.child("x")(), b.child("x")());
  EXPECT_EQ(a.child(3)(), b.child(3)());
}

TEST(RngStream, DistinctLabelsGiveDistinctStreams) {
  const RngStream root(1);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 1000; ++i) firsts.insert(root.child(i)());
  firsts.insert(root.child("draft")());
  firsts.insert(root.child("verify")());
  EXPECT_EQ(firsts.size(), 1002u);
}

TEST(RngStream, UniformExcludesZero) {
  RngStream r(3);
  double lo = 1.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    lo = std::min(lo, u);
    sum += u;
  }
  // Mean of U(0,1] with 3 sigma = 3 * sqrt(1/12 / n).
  EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RngStream, DrivesStandardDistributions) {
  RngStream r(9);
  std::uniform_int_distribution<int> d(0, 5);
  for (int i = 0; i < 1000; ++i) {
    const int v = d(r);
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 5);
  }
}

}  // namespace
}  // namespace ppow
