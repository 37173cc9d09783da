// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"

using namespace gsrobust;

TEST(Sampling, UniformDrawIsInOpenClosedUnit) {
  Rng rng(0);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform_open_closed(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(Sampling, TopKeysPrefersLowerIndexOnTies) {
  const std::vector<double> keys = {-1.0, -0.5, -0.5, -2.0, -0.5};
  EXPECT_EQ(top_keys(keys, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(top_keys(keys, 0), (std::vector<std::size_t>{}));
  EXPECT_THROW(top_keys(keys, 6), Error);
}

TEST(Sampling, SingleDrawFrequencyIsProportionalToWeight) {
  const std::vector<double> w = {1.0, 2.0, 3.0, 4.0};
  std::vector<int> hits(4, 0);
  Rng rng(42);
  const int draws = 200000;
  for (int t = 0; t < draws; ++t) ++hits[weighted_sample_without_replacement(w, 1, rng)[0]];
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = w[i] / 10.0;
    const double sd = std::sqrt(p * (1 - p) / draws);
    EXPECT_NEAR(hits[i] / double(draws), p, 5 * sd);
  }
}

TEST(Sampling, WithoutReplacementReturnsDistinctSortedIndices) {
  gst::Gen g(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> w(1 + g() % 50);
    for (double& x : w) x = gst::uniform(g, 1e-6, 1.0);
    const std::size_t count = g() % (w.size() + 1);
    Rng rng(g());
    const auto idx = weighted_sample_without_replacement(w, count, rng);
    ASSERT_EQ(idx.size(), count);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
  }
  Rng rng(1);
  EXPECT_THROW(weighted_sample_without_replacement(std::vector<double>{1.0, 0.0}, 1, rng), Error);
}

TEST(Apportion, SumsExactlyAndStaysWithinOneOfQuota) {
  gst::Gen g(4);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> f(1 + g() % 5);
    for (double& x : f) x = gst::uniform(g, 0.0, 1.0);
    const double s = std::accumulate(f.begin(), f.end(), 0.0);
    for (double& x : f) x /= s;
    const std::size_t total = g() % 10000;
    const auto parts = apportion(total, f);
    EXPECT_EQ(std::accumulate(parts.begin(), parts.end(), std::size_t{0}), total);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LE(std::abs(double(parts[i]) - f[i] * double(total)), 1.0 + 1e-9);
  }
  EXPECT_EQ(apportion(10, std::vector<double>{0.2, 0.3, 0.5}), (std::vector<std::size_t>{2, 3, 5}));
  EXPECT_EQ(apportion(7, std::vector<double>{0.2, 0.3, 0.5}), (std::vector<std::size_t>{1, 2, 4}));
}
