// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "egrm/random.hpp"
#include "egrm/scorer.hpp"
#include "egrm/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace egrm;
using namespace egrm::scorer;

namespace {

double score_oracle(const ScorerModel& m, const std::vector<double>& x) {
  const auto p = m.params();
  const std::size_t d = m.d(), h = m.hidden();
  double z = p[d * h + 2 * h];
  for (std::size_t j = 0; j < h; ++j) {
    double a = p[d * h + j];
    for (std::size_t i = 0; i < d; ++i) a += p[j * d + i] * x[i];
    z += p[d * h + h + j] * std::tanh(a);
  }
  return 1.0 / (1.0 + std::exp(-z));
}

double loss_oracle(const ScorerModel& m, const ScoredBatch& b, const HybridLossConfig& c) {
  std::vector<double> qh;
  double hub = 0.0;
  for (std::size_t s = 0; s < b.size(); ++s) {
    qh.push_back(score_oracle(m, b.features[s].values));
    const double e = std::abs(b.q[s] - qh.back());
    hub += e <= c.delta ? 0.5 * e * e : c.delta * (e - 0.5 * c.delta);
  }
  double hin = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (b.group[i] == b.group[j] && b.q[i] - b.q[j] > c.margin) {
        hin += std::max(0.0, c.margin - qh[i] + qh[j]);
        ++pairs;
      }
  return c.alpha * hub / static_cast<double>(b.size()) + (1.0 - c.alpha) * (pairs ? hin / pairs : 0.0);
}

}  // namespace

TEST(HybridLoss, PointValues) {
  EXPECT_NEAR(huber(0.55, 0.5, 0.1), 0.00125, 1e-15);
  EXPECT_NEAR(huber(0.5, 0.8, 0.1), 0.025, 1e-15);
  EXPECT_NEAR(hinge(0.6, 0.5, 0.2), 0.1, 1e-15);
  EXPECT_EQ(hinge(0.9, 0.1, 0.2), 0.0);
  EXPECT_NEAR(huber(0.0, 0.1, 0.1), 0.005, 1e-15);  // both branches agree at the kink
}

TEST(HybridLoss, HuberProperties) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double q = rng.uniform01(), qh = rng.uniform01(), delta = rng.uniform(0.01, 0.5);
    const double h = huber(q, qh, delta);
    EXPECT_GE(h, 0.0);
    EXPECT_DOUBLE_EQ(h, huber(qh, q, delta));
    EXPECT_LE(h, 0.5 * (q - qh) * (q - qh) + 1e-15);
  }
}

TEST(HybridLoss, MatchesOracleAcrossSeeds) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto c = test::scorer_case(100 + s);
    for (double alpha : {0.0, 0.7, 1.0}) {
      HybridLossConfig cfg;
      cfg.alpha = alpha;
      EXPECT_NEAR(hybrid_loss(c.model, c.batch, cfg).loss, loss_oracle(c.model, c.batch, cfg), 1e-12);
    }
  }
}

TEST(HybridLoss, InactiveHingeWithoutPairs) {
  auto c = test::scorer_case(5);
  for (auto& q : c.batch.q) q = 0.5;
  const auto r = hybrid_loss(c.model, c.batch, {});
  EXPECT_TRUE(r.hinge_inactive);
  EXPECT_EQ(r.pairs, 0u);
  EXPECT_DOUBLE_EQ(r.loss, 0.7 * r.huber_mean);
}

TEST(HybridLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto c = test::scorer_case(200 + s);
    const auto analytic = gradient(c.model, c.batch, {});
    const auto numeric = test::finite_diff(c.model.params(), [&] { return loss_oracle(c.model, c.batch, {}); });
    EXPECT_LT(test::max_rel_error(analytic, numeric, 1e-6), 1e-4) << "seed " << s;
  }
}

TEST(HybridLoss, ConfigValidation) {
  HybridLossConfig c;
  c.delta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.margin = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  TrainConfig t;
  t.steps = 0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(MinePairs, GroupedAndUngrouped) {
  const std::vector<double> q = {0.9, 0.5, 0.8, 0.1};
  const std::vector<std::size_t> g = {0, 0, 1, 1};
  using P = std::vector<std::pair<std::size_t, std::size_t>>;
  EXPECT_EQ(mine_pairs(q, 0.2, g), (P{{0, 1}, {2, 3}}));
  EXPECT_EQ(mine_pairs(q, 0.2), (P{{0, 1}, {0, 3}, {1, 3}, {2, 1}, {2, 3}}));
  EXPECT_EQ(mine_pairs(q, 0.8), (P{}));
  EXPECT_THROW(mine_pairs(q, 0.2, std::vector<std::size_t>{0}), UsageError);
}

TEST(Model, ScoreMatchesOracleAndRange) {
  const auto m = ScorerModel::initialized(16, 32, 9);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(16);
    for (auto& v : x) v = rng.uniform(-3, 3);
    const double s = m.score(x);
    EXPECT_NEAR(s, score_oracle(m, x), 1e-14);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_THROW(m.score(std::vector<double>(3)), UsageError);
  EXPECT_EQ(m.parameter_count(), 16u * 32 + 32 + 32 + 1);
}

TEST(Model, TextRoundTripIsExact) {
  const auto m = ScorerModel::initialized(12, 5, 77);
  const auto back = ScorerModel::from_text(m.to_text());
  ASSERT_EQ(back.d(), 12u);
  ASSERT_EQ(back.hidden(), 5u);
  for (std::size_t i = 0; i < m.parameter_count(); ++i) EXPECT_EQ(back.params()[i], m.params()[i]);
  const auto path = test::temp_dir("scorer-io") / "m.txt";
  m.save(path);
  EXPECT_EQ(ScorerModel::load(path).to_text(), m.to_text());
}

TEST(Model, RejectsMalformedText) {
  EXPECT_THROW(ScorerModel::from_text("nope"), ConfigError);
  EXPECT_THROW(ScorerModel::from_text("egrm-scorer 2\nd 1\nhidden 1\nseed 0\n"), ConfigError);
  EXPECT_THROW(ScorerModel::from_text("egrm-scorer 1\nd 1\nhidden 1\nseed 0\n1\n2\n"), ConfigError);
  EXPECT_THROW(ScorerModel::from_text("egrm-scorer 1\nd 1\nhidden 1\nseed 0\n1\n2\n3\nx\n"), ConfigError);
  EXPECT_THROW(ScorerModel::from_text("egrm-scorer 1\nd 1\nhidden 1\nseed 0\n1\n2\n3\n4\n5\n"), ConfigError);
  EXPECT_THROW(ScorerModel::load("/nonexistent/model.txt"), ConfigError);
}

TEST(Features, FixedSlots) {
  const std::string prompt = "What is 12 plus 30?";
  const std::string resp = "Step 1: add 12 and 30\n2. therefore 42\nAnswer: 42";
  const auto f = extract_features(prompt, resp);
  ASSERT_EQ(f.size(), kDefaultDim);
  EXPECT_DOUBLE_EQ(f.values[0], std::log1p(static_cast<double>(resp.size())));
  EXPECT_DOUBLE_EQ(f.values[1], std::log1p(static_cast<double>(prompt.size())));
  EXPECT_DOUBLE_EQ(f.values[2], 2.0);  // "step", "therefore"
  EXPECT_DOUBLE_EQ(f.values[3], 2.0);  // "Step 1", "2."
  // response words {1, 12, 2, 30, 42, add, and, answer, step, therefore}; shared {12, 30}
  EXPECT_DOUBLE_EQ(f.values[4], 0.2);
  EXPECT_DOUBLE_EQ(f.values[5], 10.0 / static_cast<double>(resp.size()));
  EXPECT_DOUBLE_EQ(f.values[6], 1.0);
  EXPECT_DOUBLE_EQ(f.values[7], std::log1p(2.0));
  double hashed = 0.0;
  for (std::size_t i = kFixedFeatures; i < f.size(); ++i) hashed += f.values[i];
  EXPECT_NEAR(hashed, 1.0, 1e-12);
  EXPECT_THROW(extract_features("a", "b", kFixedFeatures), UsageError);
}

TEST(Features, EmptyResponse) {
  const auto f = extract_features("prompt", "");
  EXPECT_DOUBLE_EQ(f.values[0], 0.0);
  for (std::size_t i = 2; i < f.size(); ++i) EXPECT_DOUBLE_EQ(f.values[i], 0.0) << i;
}

TEST(MakeBatch, GroupsByFirstAppearance) {
  const std::vector<ScoredSample> s = {{Prompt("b", "x"), "r", 0.1}, {Prompt("a", "x"), "r", 0.2},
                                       {Prompt("b", "x"), "s", 0.3}};
  const auto batch = make_batch(s);
  EXPECT_EQ(batch.group, (std::vector<std::size_t>{0, 1, 0}));
  const std::vector<std::size_t> idx = {2, 1};
  const auto sub = subset(batch, idx);
  EXPECT_EQ(sub.group, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(sub.q[0], 0.3);
}

TEST(Train, ReducesLossAndIsDeterministic) {
  synthetic::ScoredRecipe r;
  r.prompts = 20;
  const auto data = synthetic::scored_dataset(r);
  TrainConfig t;
  t.steps = 200;
  t.batch_size = 50;
  const auto a = train(data, {}, t);
  const auto b = train(data, {}, t);
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());
  EXPECT_EQ(a.loss_history.size(), 200u);
  EXPECT_EQ(a.model.to_text(), b.model.to_text());
}

TEST(Synthetic, DatasetShape) {
  const auto data = synthetic::scored_dataset({});
  ASSERT_EQ(data.size(), 1200u);
  EXPECT_EQ(data.front().prompt().id(), "syn-0");
  for (const auto& s : data) {
    EXPECT_GE(s.reference_quality(), 0.0);
    EXPECT_LE(s.reference_quality(), 1.0);
  }
}

TEST(Examples, GoldenFeatureVectorAndScore) {
  const auto f = extract_features("Tom has 3 apples and buys 4 more. How many apples?",
                                  "Step 1: 3 + 4 = 7\nStep 2: check\nAnswer: 7");
  const std::vector<double> golden = {
      3.7376696182833684,  3.9318256327243257,  2, 2, 0.25, 0.14634146341463414, 1, 0.69314718055994529,
      0.10256410256410256, 0.05128205128205128, 0.05128205128205128, 0.10256410256410256,
      0.20512820512820512, 0.12820512820512819, 0.20512820512820512, 0.15384615384615385};
  ASSERT_EQ(f.size(), golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) EXPECT_NEAR(f.values[i], golden[i], 1e-15) << i;
  EXPECT_NEAR(ScorerModel::initialized(16, 32, 43).score(f), 0.60684222926794151, 1e-14);
}

TEST(Examples, ZeroModelAndIdentityOverlap) {
  const ScorerModel zero(16, 32);
  EXPECT_DOUBLE_EQ(zero.score(std::vector<double>(16, 3.0)), 0.5);
  EXPECT_DOUBLE_EQ(extract_features("the cat sat", "The cat sat")[4], 1.0);
}

TEST(Examples, MinePairsCases) {
  using P = std::vector<std::pair<std::size_t, std::size_t>>;
  EXPECT_EQ(mine_pairs(std::vector<double>{0.9, 0.5}, 0.2), (P{{0, 1}}));
  EXPECT_EQ(mine_pairs(std::vector<double>{0.6, 0.5}, 0.2), P{});
  const std::vector<double> q = {0.9, 0.6, 0.1};
  P brute;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (q[i] - q[j] > 0.2) brute.emplace_back(i, j);
  EXPECT_EQ(mine_pairs(q, 0.2), brute);
  EXPECT_EQ(brute, (P{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(Examples, DegenerateMixing) {
  auto c = test::scorer_case(17);
  HybridLossConfig cfg;
  cfg.alpha = 1.0;
  const auto r = hybrid_loss(c.model, c.batch, cfg);
  EXPECT_EQ(r.loss, r.huber_mean);
  for (auto& q : c.batch.q) q = 0.4;
  cfg.alpha = 0.0;
  EXPECT_EQ(hybrid_loss(c.model, c.batch, cfg).loss, 0.0);
}

TEST(Examples, ThreeSampleBatchMatchesHandArithmetic) {
  const auto model = ScorerModel::initialized(4, 3, 43);
  ScoredBatch b;
  b.features = {{{0.5, -0.2, 0.1, 0.9}}, {{-0.3, 0.4, 0.8, -0.1}}, {{0.0, 0.7, -0.6, 0.2}}};
  b.q = {0.9, 0.6, 0.1};
  b.group = {0, 0, 0};
  double qh[3], hub = 0.0, hin = 0.0;
  for (int i = 0; i < 3; ++i) {
    qh[i] = score_oracle(model, b.features[i].values);
    const double e = std::abs(b.q[i] - qh[i]);
    hub += e <= 0.1 ? 0.5 * e * e : 0.1 * e - 0.005;
  }
  hin = std::max(0.0, 0.2 - (qh[0] - qh[1])) + std::max(0.0, 0.2 - (qh[0] - qh[2])) +
        std::max(0.0, 0.2 - (qh[1] - qh[2]));
  EXPECT_NEAR(hybrid_loss(model, b, {}).loss, 0.7 * hub / 3.0 + 0.3 * hin / 3.0, 1e-15);
}

TEST(Examples, ZeroErrorBatchHasZeroGradient) {
  auto c = test::scorer_case(23);
  for (std::size_t s = 0; s < c.batch.size(); ++s) c.batch.q[s] = c.model.score(c.batch.features[s]);
  HybridLossConfig cfg;
  cfg.alpha = 1.0;
  for (double g : gradient(c.model, c.batch, cfg)) EXPECT_EQ(g, 0.0);
}

TEST(Examples, SingleActiveHingePair) {
  auto c = test::scorer_case(31, 16, 2);
  c.batch.q = {0.9, 0.1};
  c.batch.group = {0, 0};
  HybridLossConfig cfg;
  cfg.alpha = 0.0;
  const double gap = c.model.score(c.batch.features[0]) - c.model.score(c.batch.features[1]);
  ASSERT_LT(gap, cfg.margin);  // hinge active
  const auto analytic = gradient(c.model, c.batch, cfg);
  // d/dθ [m - (q̂_0 - q̂_1)] by finite differences on the two scores.
  const auto d0 = test::finite_diff(c.model.params(), [&] { return c.model.score(c.batch.features[0]); });
  const auto d1 = test::finite_diff(c.model.params(), [&] { return c.model.score(c.batch.features[1]); });
  std::vector<double> expected;
  for (std::size_t i = 0; i < d0.size(); ++i) expected.push_back(-(1.0 - cfg.alpha) * (d0[i] - d1[i]));
  EXPECT_LT(test::max_rel_error(analytic, expected, 1e-6), 1e-4);
}

TEST(Examples, TrainingLossHistoriesAreBitIdentical) {
  synthetic::ScoredRecipe r;
  r.prompts = 10;
  const auto data = synthetic::scored_dataset(r);
  TrainConfig t;
  t.steps = 50;
  EXPECT_EQ(train(data, {}, t).loss_history, train(data, {}, t).loss_history);
}

TEST(Examples, HuberStableAtSmallLearningRate) {
  synthetic::ScoredRecipe r;
  r.prompts = 100;
  const auto data = synthetic::scored_dataset(r);
  HybridLossConfig cfg;
  cfg.alpha = 1.0;
  TrainConfig t;
  t.learning_rate = 1e-2;
  t.steps = 300;
  const auto h = train(data, cfg, t).loss_history;
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], 1.1 * h[i - 1]) << "step " << i;
}
