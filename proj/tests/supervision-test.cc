// tests/supervision-test.cc

// Copyright 2026  The bridge-oa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "bridge_oa/error.h"
#include "bridge_oa/supervision.h"

namespace bridge_oa {
namespace {

double ri(const std::vector<double> &l, const std::vector<double> &w,
          Eigen::VectorXd *g = nullptr) {
  return loss_ri(l, w, g);
}

TEST(Mos, NormAndTarget) {
  EXPECT_EQ(norm_mos(1.0), 0.0);
  EXPECT_EQ(norm_mos(5.0), 1.0);
  EXPECT_EQ(norm_mos(3.0), 0.5);
  EXPECT_NEAR(norm_mos(4.2), 0.8, 1e-15);
  EXPECT_THROW(norm_mos(0.9), InvalidArgument);
  EXPECT_THROW(norm_mos(5.1), InvalidArgument);
  EXPECT_EQ(pq_target({4.0, 2.0}), 0.5);
  EXPECT_EQ(pq_target({5.0, 5.0}), 1.0);
  EXPECT_EQ(pq_target({1.0, 1.0}), 0.0);
  EXPECT_EQ(pq_target({3.0, 2.0}), 0.375);
  EXPECT_THROW(pq_target({6.0, 2.0}), InvalidArgument);
}

TEST(LossPq, Examples) {
  EXPECT_EQ(loss_pq(0.5, 0.5), 0.0);
  EXPECT_EQ(loss_pq(0.0, 1.0), 1.0);
  EXPECT_NEAR(loss_pq(0.3, 0.7), 0.16, 1e-15);
  std::vector<double> o = {0.5, 0.0, 0.3}, t = {0.5, 1.0, 0.7};
  EXPECT_NEAR(loss_pq(o, t), (0.0 + 1.0 + 0.16) / 3.0, 1e-15);
}

TEST(LossCombined, Examples) {
  EXPECT_EQ(loss_combined(0.4, 0.6), 0.5);
  EXPECT_NEAR(loss_combined(0.0, 0.313262), 0.156631, 1e-15);
  // Linear with slope 1/2 in each argument.
  EXPECT_NEAR(loss_combined(1.25, 0.5) - loss_combined(0.25, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(loss_combined(0.5, 1.25) - loss_combined(0.5, 0.25), 0.5, 1e-15);
}

TEST(LossRi, HandValues) {
  // -ln sigmoid(1) = ln(1 + e^-1)
  EXPECT_NEAR(ri({0.1, 0.4, 0.2}, {0.1, 0.4, 0.2}), 0.313262, 1e-6);
  EXPECT_NEAR(ri({10, -10}, {-10, 10}), 0.693102, 1e-5);
  EXPECT_NEAR(loss_ri_lower_bound(), 0.31326168751822286, 1e-15);
  EXPECT_NEAR(loss_ri_upper_bound(), 0.69314718055994531, 1e-15);
  // Direct evaluation of the opposed case from its definition.
  const double a = 1.0 / (1.0 + std::exp(-10.0)), b = 1.0 / (1.0 + std::exp(10.0));
  const double cos = 2.0 * a * b / (a * a + b * b);
  EXPECT_NEAR(cos, 9.08e-5, 1e-7);
  EXPECT_NEAR(ri({10, -10}, {-10, 10}), std::log1p(std::exp(-cos)), 1e-15);
}

TEST(LossRi, Errors) {
  EXPECT_THROW(ri({1, 2}, {1, 2, 3}), InvalidArgument);
  EXPECT_THROW(ri({1}, {1}), InvalidArgument);
}

TEST(LossRi, BoundsAndSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(2, 21);
  std::normal_distribution<double> g(0.0, 5.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = dim(rng);
    std::vector<double> a(n), b(n);
    for (auto &v : a) v = g(rng);
    for (auto &v : b) v = g(rng);
    const double l = ri(a, b);
    ASSERT_GE(l, 0.313262 - 1e-6);
    ASSERT_LT(l, 0.693147);
    ASSERT_NEAR(l, ri(b, a), 1e-12);
  }
}

TEST(LossRi, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 2.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 12;
    std::vector<double> l(n), w(n);
    for (auto &v : l) v = g(rng);
    for (auto &v : w) v = std::abs(g(rng));
    Eigen::VectorXd grad;
    ri(l, w, &grad);
    for (int i = 0; i < n; ++i) {
      auto lp = l, lm = l;
      lp[i] += h;
      lm[i] -= h;
      const double fd = (ri(lp, w) - ri(lm, w)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-7});
      ASSERT_LT(std::abs(fd - grad[i]) / denom, 1e-6) << "trial " << trial << " i " << i;
    }
  }
}

TEST(NormalizeText, Examples) {
  EXPECT_EQ(normalize_text("The CAT, sat.").words,
            (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_EQ(normalize_text("don't stop").words, (std::vector<std::string>{"don't", "stop"}));
  EXPECT_TRUE(normalize_text("  ").empty());
  EXPECT_EQ(normalize_text("'quoted' words'").words,
            (std::vector<std::string>{"quoted", "words"}));
}

// Exhaustive search over all monotone alignments.
std::size_t brute_force_edits(const std::vector<int> &r, const std::vector<int> &h,
                              std::size_t i = 0, std::size_t j = 0) {
  if (i == r.size()) return h.size() - j;
  if (j == h.size()) return r.size() - i;
  std::size_t best = brute_force_edits(r, h, i + 1, j + 1) + (r[i] != h[j]);
  best = std::min(best, brute_force_edits(r, h, i + 1, j) + 1);
  best = std::min(best, brute_force_edits(r, h, i, j + 1) + 1);
  return best;
}

TEST(Wer, EqualsExhaustiveAlignment) {
  std::vector<std::vector<int>> seqs = {{}};
  for (int len = 1; len <= 5; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto &s : seqs)
      if (static_cast<int>(s.size()) == len - 1)
        for (int a = 0; a < 3; ++a) {
          auto t = s;
          t.push_back(a);
          next.push_back(t);
        }
    seqs.insert(seqs.end(), next.begin(), next.end());
  }
  ASSERT_EQ(seqs.size(), 364u);
  const char *names[] = {"a", "b", "c"};
  auto to_t = [&](const std::vector<int> &s) {
    Transcript t;
    for (int v : s) t.words.push_back(names[v]);
    return t;
  };
  for (const auto &r : seqs) {
    if (r.empty()) continue;
    Transcript rt = to_t(r);
    for (const auto &h : seqs) {
      EditCounts c = edit_distance(rt, to_t(h));
      ASSERT_EQ(c.errors(), brute_force_edits(r, h));
      ASSERT_EQ(c.ref_words, r.size());
      // The counts describe an actual alignment.
      ASSERT_EQ(r.size() - c.deletions + c.insertions, h.size());
    }
  }
}

TEST(Wer, Examples) {
  auto t = [](const char *s) { return normalize_text(s); };
  EXPECT_EQ(wer(t("a b c"), t("a b c")), 0.0);
  EXPECT_DOUBLE_EQ(wer(t("a b c"), t("a x c")), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(wer(t("a b"), t("a b c")), 0.5);
  EXPECT_DOUBLE_EQ(wer(t("a"), t("x y z")), 3.0);  // no clipping
  EXPECT_THROW(wer(t(""), t("a")), InvalidArgument);
}

}  // namespace
}  // namespace bridge_oa
