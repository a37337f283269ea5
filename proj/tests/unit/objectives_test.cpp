#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gprompt/error.hpp"
#include "gprompt/objectives.hpp"
#include "gprompt/prompt.hpp"
#include "support.hpp"

namespace gprompt {
namespace {

using testing::ref_adv;
using testing::ref_consistency;
using testing::ref_disc;
using testing::ref_diversity;
using testing::ref_log_sigmoid;

const double kLog2 = std::log(2.0);

Tensor rows_tensor(const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return Tensor(rows.size(), rows[0].size(), std::move(flat));
}

Tensor col(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(n, 1, std::move(v));
}

TEST(Consistency, EmptyMaskGivesZero) {
  Tensor pw = rows_tensor({{0.6, 0.4}, {0.5, 0.5}});
  Tensor ph = rows_tensor({{0.1, 0.9}, {0.3, 0.7}});
  BatchPredictions bp = make_batch_predictions(pw, ph, 0.7);
  EXPECT_EQ(bp.confident(), 0u);
  EXPECT_EQ(consistency_loss(bp).item(), 0.0);
}

TEST(Consistency, PerfectMatchGivesZero) {
  BatchPredictions bp = make_batch_predictions(rows_tensor({{0.9, 0.1}}), rows_tensor({{1.0, 0.0}}), 0.7);
  EXPECT_NEAR(consistency_loss(bp).item(), 0.0, 1e-10);
}

TEST(Consistency, HalfLogTwo) {
  auto pw = std::vector<std::vector<double>>{{0.9, 0.1}, {0.55, 0.45}};
  auto ph = std::vector<std::vector<double>>{{0.5, 0.5}, {0.2, 0.8}};
  BatchPredictions bp = make_batch_predictions(rows_tensor(pw), rows_tensor(ph), 0.7);
  const double v = consistency_loss(bp).item();
  EXPECT_NEAR(v, kLog2 / 2.0, 1e-10);
  EXPECT_NEAR(v, ref_consistency(pw, ph, 0.7), 1e-10);
  EXPECT_NEAR(v, 0.3466, 1e-4);
}

TEST(Consistency, NormalizedByFullBatch) {
  auto pw = std::vector<std::vector<double>>{{0.9, 0.1}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  auto ph = std::vector<std::vector<double>>{{0.25, 0.75}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  BatchPredictions bp = make_batch_predictions(rows_tensor(pw), rows_tensor(ph), 0.7);
  EXPECT_NEAR(consistency_loss(bp).item(), std::log(4.0) / 4.0, 1e-10);
}

TEST(Consistency, PseudoLabelTiesGoLow) {
  BatchPredictions bp = make_batch_predictions(rows_tensor({{0.4, 0.4, 0.2}}), rows_tensor({{0.3, 0.3, 0.4}}), 0.3);
  EXPECT_EQ(bp.pseudo[0], 0);
}

TEST(Consistency, GradientOnlyThroughPromptedScores) {
  Tensor pw(1, 2, {0.9, 0.1}, true);
  Tensor logits(1, 2, {0.3, -0.2}, true);
  BatchPredictions bp = make_batch_predictions(pw, softmax_rows(logits), 0.7);
  consistency_loss(bp).backward();
  EXPECT_FALSE(pw.has_grad());
  EXPECT_TRUE(logits.has_grad());
}

TEST(Consistency, MatchesScalarReferenceOnRandomBatches) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    Tensor a = softmax_rows(testing::random_tensor(6, 4, rng, -3, 3, false));
    Tensor b = softmax_rows(testing::random_tensor(6, 4, rng, -3, 3, false));
    std::vector<std::vector<double>> pw(6), ph(6);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t c = 0; c < 4; ++c) {
        pw[i].push_back(a(i, c));
        ph[i].push_back(b(i, c));
      }
    BatchPredictions bp = make_batch_predictions(a, b, 0.5);
    EXPECT_NEAR(consistency_loss(bp).item(), ref_consistency(pw, ph, 0.5), 1e-10);
    EXPECT_GE(consistency_loss(bp).item(), 0.0);
    EXPECT_NEAR(diversity_loss(b).item(), ref_diversity(ph), 1e-10);
  }
}

TEST(Threshold, FixedModeIsFlat) {
  ThresholdState s(ThresholdMode::fixed, 0.7, 3);
  s.set_counts({1, 5, 9});
  for (double t : s.thresholds()) EXPECT_EQ(t, 0.7);
}

TEST(Threshold, EqualCountsGiveBaseTau) {
  ThresholdState s(ThresholdMode::class_dynamic, 0.8, 3);
  s.set_counts({4, 4, 4});
  for (double t : s.thresholds()) EXPECT_DOUBLE_EQ(t, 0.8);
}

TEST(Threshold, EmptyClassAlwaysAdmitted) {
  ThresholdState s(ThresholdMode::class_dynamic, 0.7, 2);
  s.set_counts({0, 3});
  EXPECT_EQ(s.thresholds()[0], 0.0);
  EXPECT_DOUBLE_EQ(s.thresholds()[1], 0.7);
}

TEST(Threshold, WarpedValues) {
  ThresholdState s(ThresholdMode::class_dynamic, 0.7, 2);
  s.set_counts({1, 2});
  auto t = s.thresholds();
  EXPECT_NEAR(t[0], 0.7 * 0.5 / 1.5, 1e-12);
  EXPECT_NEAR(t[0], 0.2333, 1e-4);
  EXPECT_NEAR(t[1], 0.7, 1e-12);
}

TEST(Threshold, UpdateCountsConfidentRowsPerPseudoClass) {
  ThresholdState s(ThresholdMode::class_dynamic, 0.7, 2);
  Tensor pw = rows_tensor({{0.9, 0.1}, {0.2, 0.8}, {0.75, 0.25}, {0.6, 0.4}});
  BatchPredictions bp = make_batch_predictions(pw, pw, s.thresholds());
  auto t = update_threshold(s, bp);
  EXPECT_EQ(s.counts(), (std::vector<double>{2, 1}));
  EXPECT_NEAR(t[0], 0.7, 1e-12);
  EXPECT_NEAR(t[1], 0.7 * 0.5 / 1.5, 1e-12);
  s.reset();
  EXPECT_EQ(s.counts(), (std::vector<double>{0, 0}));
}

TEST(Threshold, InvalidTau) {
  EXPECT_THROW(ThresholdState(ThresholdMode::fixed, 0.0, 2), ConfigError);
  EXPECT_THROW(ThresholdState(ThresholdMode::fixed, 1.2, 2), ConfigError);
  EXPECT_THROW(parse_threshold_mode("adaptive"), UsageError);
}

TEST(Threshold, HigherTauShrinksConfidentSet) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    Tensor p = softmax_rows(testing::random_tensor(16, 3, rng, -4, 4, false));
    BatchPredictions lo = make_batch_predictions(p, p, 0.5), hi = make_batch_predictions(p, p, 0.9);
    for (std::size_t i = 0; i < 16; ++i)
      EXPECT_TRUE(!hi.mask[i] || lo.mask[i]);
  }
}

TEST(Diversity, Extremes) {
  Tensor uniform = Tensor::filled(4, 5, 0.2);
  EXPECT_NEAR(diversity_loss(uniform).item(), -std::log(5.0), 1e-10);
  Tensor onehot = rows_tensor({{1, 0, 0}, {1, 0, 0}});
  EXPECT_NEAR(diversity_loss(onehot).item(), 0.0, 1e-10);
  Tensor skew = rows_tensor({{1.0, 0.0}, {0.5, 0.5}});
  EXPECT_NEAR(diversity_loss(skew).item(), 0.75 * std::log(0.75) + 0.25 * std::log(0.25), 1e-10);
  EXPECT_NEAR(diversity_loss(skew).item(), -0.5623, 1e-4);
}

TEST(Diversity, BoundedByLogC) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    double v = diversity_loss(softmax_rows(testing::random_tensor(5, 4, rng, -5, 5, false))).item();
    EXPECT_GE(v, -std::log(4.0) - 1e-12);
    EXPECT_LE(v, 1e-12);
  }
}

TEST(DiscriminatorLoss, Values) {
  EXPECT_NEAR(discriminator_loss(col({0.0, 0.0}), col({0.0, 0.0})).item(), kLog2, 1e-10);
  EXPECT_NEAR(discriminator_loss(col({60.0}), col({-60.0})).item(), 0.0, 1e-10);
  const double v = discriminator_loss(col({1.0}), col({-1.0})).item();
  EXPECT_NEAR(v, -ref_log_sigmoid(1.0), 1e-10);
  EXPECT_NEAR(v, ref_disc({1.0}, {-1.0}), 1e-10);
  EXPECT_NEAR(v, 0.3133, 1e-4);
  EXPECT_THROW(discriminator_loss(col({1.0}), col({1.0, 2.0})), ContractError);
}

TEST(AdversarialLoss, Values) {
  EXPECT_NEAR(adversarial_loss(col({0.0})).item(), kLog2, 1e-10);
  EXPECT_NEAR(adversarial_loss(col({60.0})).item(), 0.0, 1e-10);
  const double v = adversarial_loss(col({-2.0})).item();
  EXPECT_NEAR(v, ref_adv({-2.0}), 1e-10);
  EXPECT_NEAR(v, 2.1269, 1e-4);
}

TEST(TotalLoss, Values) {
  auto s = [](double v) { return Tensor::scalar(v); };
  EXPECT_EQ(total_loss(s(0.4), s(-1.0), s(3.0), 0.0, 0.0).item(), 0.4);
  EXPECT_DOUBLE_EQ(total_loss(s(1), s(2), s(3), 1.0, 1.0).item(), 6.0);
  const double v = total_loss(s(kLog2 / 2), s(0.75 * std::log(0.75) + 0.25 * std::log(0.25)), s(kLog2), 1.0, 0.5).item();
  EXPECT_NEAR(v, kLog2 / 2 + 0.75 * std::log(0.75) + 0.25 * std::log(0.25) + 0.5 * kLog2, 1e-12);
  EXPECT_NEAR(v, 0.1309, 1e-4);
}

TEST(FewShot, NoLabelsReducesToConsistency) {
  std::mt19937_64 rng(10);
  Tensor a = softmax_rows(testing::random_tensor(5, 3, rng, -3, 3, false));
  Tensor b = softmax_rows(testing::random_tensor(5, 3, rng, -3, 3, false));
  BatchPredictions bp = make_batch_predictions(a, b, 0.4);
  EXPECT_EQ(fewshot_consistency_loss(bp, {}, {}, {0, 1, 2, 3, 4}, 1.0).item(), consistency_loss(bp).item());
}

TEST(FewShot, CorrectLabeledOneHotGivesZero) {
  BatchPredictions bp = make_batch_predictions(rows_tensor({{0.5, 0.5}, {0.6, 0.4}}),
                                               rows_tensor({{0.0, 1.0}, {0.5, 0.5}}), 0.7);
  EXPECT_NEAR(fewshot_consistency_loss(bp, {0}, {1}, {1}, 1.0).item(), 0.0, 1e-10);
}

TEST(FewShot, WeightedExample) {
  BatchPredictions bp = make_batch_predictions(rows_tensor({{0.5, 0.5}, {0.9, 0.1}}),
                                               rows_tensor({{0.5, 0.5}, {0.5, 0.5}}), 0.7);
  const double v = fewshot_consistency_loss(bp, {0}, {1}, {1}, 0.5).item();
  EXPECT_NEAR(v, (kLog2 + 0.5 * kLog2) / 2.0, 1e-10);
  EXPECT_NEAR(v, 0.5199, 1e-4);
}

TEST(FewShot, PseudoTermCoversWholeBatch) {
  std::vector<std::vector<double>> pw{{0.9, 0.1}, {0.2, 0.8}, {0.5, 0.5}}, ph{{0.6, 0.4}, {0.3, 0.7}, {0.1, 0.9}};
  BatchPredictions bp = make_batch_predictions(rows_tensor(pw), rows_tensor(ph), 0.7);
  const double v = fewshot_consistency_loss(bp, {0}, {1}, {1, 2}, 0.5).item();
  // labeled row 0 is also confident, so it adds to both terms
  EXPECT_NEAR(v, (-std::log(0.4) + 0.5 * (-std::log(0.6) - std::log(0.7))) / 3.0, 1e-10);
  EXPECT_NEAR(v, testing::ref_fewshot(pw, ph, 0.7, {0}, {1}, 0.5), 1e-10);
}

TEST(FewShot, ContractViolations) {
  BatchPredictions bp = make_batch_predictions(rows_tensor({{0.5, 0.5}, {0.9, 0.1}}),
                                               rows_tensor({{0.5, 0.5}, {0.5, 0.5}}), 0.7);
  EXPECT_THROW(fewshot_consistency_loss(bp, {0}, {1}, {0, 1}, 1.0), ContractError);
  EXPECT_THROW(fewshot_consistency_loss(bp, {0}, {1}, {}, 1.0), ContractError);
  EXPECT_THROW(fewshot_consistency_loss(bp, {0}, {}, {1}, 1.0), ContractError);
  EXPECT_THROW(fewshot_consistency_loss(bp, {5}, {1}, {1}, 1.0), ContractError);
}

TEST(Discriminator, ShapesAndInit) {
  Discriminator d(6, 3);
  auto p = d.parameters();
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[0].first, "disc.W1");
  EXPECT_EQ(p[0].second.rows(), 6u);
  EXPECT_EQ(p[2].second.cols(), 1u);
  for (double b : p[1].second.data()) EXPECT_EQ(b, 0.0);
  std::mt19937_64 rng(1);
  Tensor out = d.forward(testing::random_tensor(5, 6, rng, -1, 1, false));
  EXPECT_EQ(out.rows(), 5u);
  EXPECT_EQ(out.cols(), 1u);
  EXPECT_THROW(d.forward(Tensor::zeros(2, 5)), DimensionError);
}

TEST(GradientIsolation, DiscriminatorStepTouchesOnlyDiscriminator) {
  Discriminator d(4, 2);
  std::mt19937_64 rng(4);
  Tensor za = testing::random_tensor(3, 4, rng), zp = testing::random_tensor(3, 4, rng);
  discriminator_loss(d, za, zp).backward();
  EXPECT_FALSE(za.has_grad());
  EXPECT_FALSE(zp.has_grad());
  for (auto& [name, t] : d.parameters()) EXPECT_TRUE(t.has_grad()) << name;
}

TEST(GradientIsolation, AdversarialStepTouchesOnlyPromptSide) {
  Discriminator d(4, 2);
  std::mt19937_64 rng(5);
  Tensor zp = testing::random_tensor(3, 4, rng);
  adversarial_loss(d, zp).backward();
  EXPECT_TRUE(zp.has_grad());
  for (auto& [name, t] : d.parameters()) EXPECT_FALSE(t.has_grad()) << name;
}

TEST(GradientIsolation, DiscriminatorGradientMatchesFiniteDifferences) {
  Discriminator d(3, 7);
  std::mt19937_64 rng(6);
  Tensor za = testing::random_tensor(4, 3, rng, -2, 2, false), zp = testing::random_tensor(4, 3, rng, -2, 2, false);
  std::vector<Tensor> params;
  for (auto& [name, t] : d.parameters()) params.push_back(t);
  EXPECT_TRUE(testing::check_gradients([&] { return discriminator_loss(d, za, zp); }, params).ok);
}

TEST(BatchPredictions, Validation) {
  EXPECT_THROW(make_batch_predictions(rows_tensor({{0.5, 0.5}}), rows_tensor({{0.2, 0.3, 0.5}}), 0.5),
               DimensionError);
  EXPECT_THROW(make_batch_predictions(rows_tensor({{0.5, 0.5}}), rows_tensor({{0.5, 0.5}}), std::vector<double>{0.5}),
               DimensionError);
}

}  // namespace
}  // namespace gprompt
