#include <gtest/gtest.h>

#include <random>

#include "factcheck/errors.hpp"
#include "factcheck/metrics.hpp"

using namespace factcheck;
using namespace factcheck::metrics;

namespace {
constexpr auto S = SupportLabel::supported;
constexpr auto U = SupportLabel::unsupported;

std::vector<SupportLabel> labels(const std::vector<int>& v) {
  std::vector<SupportLabel> out;
  for (int x : v) out.push_back(label_from_bool(x == 1));
  return out;
}
}  // namespace

TEST(BAcc, Examples) {
  EXPECT_NEAR(bacc(ConfusionCounts{3, 1, 2, 2}), 0.625, 1e-12);
  auto gold = labels({1, 1, 0, 0, 1, 0});
  EXPECT_DOUBLE_EQ(bacc(gold, gold), 1.0);
  EXPECT_DOUBLE_EQ(bacc(std::vector<SupportLabel>(6, S), gold), 0.5);
  EXPECT_THROW(bacc(ConfusionCounts{3, 1, 0, 0}), DataError);
  auto c = confusion(labels({1, 0, 1, 0}), labels({1, 1, 0, 0}));
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 1, 1}));
}

TEST(Tune, SeparableScores) {
  std::vector<ScoredItem> items{{0.9, S}, {0.8, S}, {0.2, U}, {0.1, U}};
  auto t = tune_threshold(items, {0, 1});
  EXPECT_DOUBLE_EQ(t.threshold, 0.5);
  EXPECT_DOUBLE_EQ(t.bacc, 1.0);
}

TEST(Tune, IdenticalScoresPickRangeMinimum) {
  std::vector<ScoredItem> items{{0.4, S}, {0.4, U}, {0.4, S}, {0.4, U}};
  auto t = tune_threshold(items, {0, 1});
  EXPECT_DOUBLE_EQ(t.threshold, 0.0);
  EXPECT_DOUBLE_EQ(t.bacc, 0.5);
}

TEST(Tune, MatchesDenseGrid) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<ScoredItem> items;
    for (int i = 0; i < 20; ++i)
      items.push_back({static_cast<double>(rng() % 1000) / 1000.0 + 0.0005, label_from_bool(rng() % 2 == 0)});
    items[0].gold = S;
    items[1].gold = U;
    double grid_best = 0.0;
    for (int k = 0; k < 10000; ++k) grid_best = std::max(grid_best, bacc_at(items, k / 9999.0));
    auto t = tune_threshold(items, {0, 1});
    EXPECT_NEAR(t.bacc, grid_best, 1e-9);
    EXPECT_NEAR(bacc_at(items, t.threshold), t.bacc, 1e-12);
  }
}

TEST(Bootstrap, TiesAndDominance) {
  auto gold = labels({1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
  auto same = labels({1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(paired_bootstrap(same, same, gold, 200, 3).p_value, 1.0);
  auto wrong = labels({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
  auto b_over_a = paired_bootstrap(wrong, gold, gold, 200, 3);
  EXPECT_DOUBLE_EQ(b_over_a.p_value, 1.0);
  EXPECT_FALSE(b_over_a.significant);
  auto a_over_b = paired_bootstrap(gold, wrong, gold, 200, 3);
  EXPECT_DOUBLE_EQ(a_over_b.p_value, 0.0);
  EXPECT_TRUE(a_over_b.significant);
}

TEST(Bootstrap, StreamIsDeterministicAndValid) {
  auto gold = labels({1, 0, 0, 0, 0, 0, 0, 0});
  auto a = bootstrap_indices(gold, 300, 5);
  EXPECT_EQ(a, bootstrap_indices(gold, 300, 5));
  EXPECT_NE(a, bootstrap_indices(gold, 300, 6));
  ASSERT_EQ(a.size(), 300u);
  for (const auto& s : a) {
    EXPECT_EQ(s.size(), gold.size());
    bool pos = false;
    for (auto i : s) pos = pos || i == 0;
    EXPECT_TRUE(pos);
  }
  EXPECT_THROW(bootstrap_indices(labels({1, 1}), 10, 0), DataError);
}

TEST(Fleiss, HandOracle) {
  EXPECT_NEAR(fleiss_kappa({{1, 1, 1}, {1, 1, 0}, {0, 0, 0}, {1, 0, 0}}), 1.0 / 3.0, 1e-9);
  EXPECT_DOUBLE_EQ(fleiss_kappa({{1, 1, 1}, {0, 0, 0}, {1, 1, 1}}), 1.0);
  EXPECT_DOUBLE_EQ(fleiss_kappa({{1, 1}, {1, 1}}), 1.0);
  EXPECT_LT(fleiss_kappa({{1, 0}, {0, 1}, {1, 0}, {0, 1}}), 0.0);
  EXPECT_THROW(fleiss_kappa({{1, 0}, {1}}), DataError);
  EXPECT_THROW(fleiss_kappa({}), DataError);
}
