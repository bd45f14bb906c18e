// Copyright 2026 The DepthSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "depthseg/metrics.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "depthseg/errors.hpp"
#include "../oracles.hpp"

namespace depthseg {
namespace {

using testing::noisy_copy;
using testing::oracle_metrics;
using testing::random_mask_values;

TEST(ConfusionMatrix, AccumulatesCounts) {
  ConfusionMatrix cm;
  std::vector<std::uint8_t> same(4, 2);
  accumulate(cm, same, same);
  EXPECT_EQ(cm(2, 2), 4u);
  EXPECT_EQ(cm.total(), 4u);
  std::vector<std::uint8_t> ignore(4, kIgnoreLabel);
  accumulate(cm, same, ignore);
  EXPECT_EQ(cm.total(), 4u);
  std::vector<std::uint8_t> gt{0, 1}, pred{1, 1};
  accumulate(cm, pred, gt);
  EXPECT_EQ(cm(0, 1), 1u);
  EXPECT_EQ(cm(1, 1), 1u);
}

TEST(ConfusionMatrix, RejectsBadInput) {
  ConfusionMatrix cm;
  std::vector<std::uint8_t> a{0, 1}, b{0};
  EXPECT_THROW(accumulate(cm, a, b), InputError);
  std::vector<std::uint8_t> bad{9, 0};
  EXPECT_THROW(accumulate(cm, bad, a), InputError);
  EXPECT_THROW(accumulate(cm, a, bad), InputError);
  std::vector<std::uint8_t> ignored_pred{kIgnoreLabel, 0};
  EXPECT_THROW(accumulate(cm, ignored_pred, a), InputError);
}

TEST(ConfusionMatrix, MergeIsElementwiseSum) {
  std::mt19937_64 rng(1);
  ConfusionMatrix a, b, all;
  auto g1 = random_mask_values(rng, 100, 7), p1 = random_mask_values(rng, 100, 7);
  auto g2 = random_mask_values(rng, 100, 7), p2 = random_mask_values(rng, 100, 7);
  accumulate(a, p1, g1);
  accumulate(b, p2, g2);
  accumulate(all, p1, g1);
  accumulate(all, p2, g2);
  a += b;
  EXPECT_EQ(a, all);
}

TEST(Report, PerfectDiagonal) {
  for (int n : {2, 3, 7}) {
    ConfusionMatrix cm(n);
    for (int k = 0; k < n; ++k) cm(k, k) = 10 + k;
    auto r = compute_report(cm);
    for (double v : {r.mPre, r.mRecall, r.mF1, r.mIoU, r.OA, r.Kappa}) EXPECT_DOUBLE_EQ(v, 1.0);
  }
}

TEST(Report, KappaHandExample) {
  // Two classes: TP=40, FN=10, FP=5, TN=45 (rows are ground truth).
  ConfusionMatrix cm(2);
  cm(1, 1) = 40;
  cm(1, 0) = 10;
  cm(0, 1) = 5;
  cm(0, 0) = 45;
  EXPECT_NEAR(binary_kappa(40, 5, 10, 45), 0.7, 1e-15);
  EXPECT_NEAR(compute_report(cm).Kappa, 0.7, 1e-12);
}

TEST(Report, FourPixelExample) {
  ConfusionMatrix cm(2);
  std::vector<std::uint8_t> gt{0, 0, 1, 1}, pred{0, 0, 0, 0};
  accumulate(cm, pred, gt);
  auto r = compute_report(cm);
  EXPECT_DOUBLE_EQ(r.per_class[0].iou, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[1].iou, 0.0);
  EXPECT_DOUBLE_EQ(r.mIoU, 0.25);
  // Class 1 is never predicted: its precision has an empty denominator.
  ASSERT_EQ(r.per_class[1].undefined.size(), 1u);
  EXPECT_EQ(r.per_class[1].undefined[0], "precision");
}

TEST(Report, MatchesBruteForceOracle) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    auto gt = random_mask_values(rng, 32 * 32, 7);
    auto pred = noisy_copy(rng, gt, 0.1 * (trial % 10), 7);
    ConfusionMatrix cm;
    accumulate(cm, pred, gt);
    const auto r = compute_report(cm);
    const auto o = oracle_metrics(pred, gt, 7);
    EXPECT_NEAR(r.mPre, o.mPre, 1e-12);
    EXPECT_NEAR(r.mRecall, o.mRecall, 1e-12);
    EXPECT_NEAR(r.mF1, o.mF1, 1e-12);
    EXPECT_NEAR(r.mIoU, o.mIoU, 1e-12);
    EXPECT_NEAR(r.OA, o.OA, 1e-12);
    EXPECT_NEAR(r.Kappa, o.Kappa, 1e-12);
  }
}

TEST(Report, BinaryKappaMatchesMulticlassForm) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d(0, 500);
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionMatrix cm(2);
    const double tp = d(rng) + 1, fn = d(rng), fp = d(rng), tn = d(rng) + 1;
    cm(1, 1) = static_cast<std::uint64_t>(tp);
    cm(1, 0) = static_cast<std::uint64_t>(fn);
    cm(0, 1) = static_cast<std::uint64_t>(fp);
    cm(0, 0) = static_cast<std::uint64_t>(tn);
    EXPECT_NEAR(compute_report(cm).Kappa, binary_kappa(tp, fp, fn, tn), 1e-12);
  }
}

TEST(Report, RangesAndEmptyMatrix) {
  EXPECT_THROW(compute_report(ConfusionMatrix{}), UndefinedMetricError);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ConfusionMatrix cm;
    accumulate(cm, random_mask_values(rng, 256, 7), random_mask_values(rng, 256, 7));
    auto r = compute_report(cm);
    for (double v : {r.mPre, r.mRecall, r.mF1, r.mIoU, r.OA}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_LE(r.mIoU, r.mF1 + 1e-15);
    EXPECT_LE(r.Kappa, 1.0);
  }
}

TEST(Report, FormatRoundTripsThroughKeyValues) {
  ConfusionMatrix cm(2);
  cm(0, 0) = 3;
  cm(1, 0) = 1;
  cm(1, 1) = 2;
  const std::vector<std::string> names{"a", "b"};
  auto kv = parse_key_values(format_report(compute_report(cm), names));
  for (const char* k : {"mPre", "mRecall", "mF1", "mIoU", "OA", "Kappa", "pixel_accuracy"}) EXPECT_TRUE(kv.contains(k)) << k;
  EXPECT_EQ(kv.at("class.1.name"), "b");
  EXPECT_NEAR(std::stod(kv.at("mIoU")), compute_report(cm).mIoU, 1e-12);
}

}  // namespace
}  // namespace depthseg
