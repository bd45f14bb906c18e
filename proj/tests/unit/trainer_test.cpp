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

#include "depthseg/trainer.hpp"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "depthseg/errors.hpp"
#include "depthseg/params.hpp"
#include "../support.hpp"

namespace depthseg {
namespace {

using testing::TempDir;

TrainConfig quick_config(std::int64_t steps) {
  auto cfg = TrainConfig::for_backbone(BackboneName::kTiny);
  cfg.steps = steps;
  cfg.batch_size = 2;
  return cfg;
}

const SyntheticSet& small_set() {
  static const SyntheticSet set = [] {
    SynthOptions o;
    o.tiles = 4;
    o.size = 32;
    o.seed = 3;
    return synthesize_in_memory(o);
  }();
  return set;
}

TEST(Schedule, RecipeValues) {
  TrainConfig cfg;
  EXPECT_EQ(lr_at(0, 1000, cfg), 1e-4);
  EXPECT_EQ(lr_at(500, 1000, cfg), 2e-5);
  EXPECT_EQ(lr_at(900, 1000, cfg), 4e-6);
}

TEST(Schedule, SegmentBoundaries) {
  TrainConfig cfg;
  for (std::int64_t total : {1, 2, 3, 7, 10, 20, 100, 300, 333, 1000, 4096}) {
    const auto b1 = static_cast<std::int64_t>(std::ceil(0.3 * total - 1e-9));
    const auto b2 = static_cast<std::int64_t>(std::ceil(0.6 * total - 1e-9));
    EXPECT_EQ(milestone_step(0.3, total), b1);
    EXPECT_EQ(milestone_step(0.6, total), b2);
    for (std::int64_t s = 0; s < total; ++s) {
      const double expected = s < b1 ? 1e-4 : (s < b2 ? 2e-5 : 4e-6);
      ASSERT_EQ(lr_at(s, total, cfg), expected) << "step " << s << " of " << total;
    }
  }
  EXPECT_EQ(milestone_step(0.3, 10), 3);
  EXPECT_EQ(milestone_step(0.6, 10), 6);
  EXPECT_EQ(milestone_step(0.3, 300), 90);
  EXPECT_EQ(milestone_step(0.6, 300), 180);
}

TEST(Schedule, NonIncreasingWithThreeValues) {
  TrainConfig cfg;
  for (std::int64_t total : {10, 57, 300}) {
    std::set<double> values;
    double prev = lr_at(0, total, cfg);
    for (std::int64_t s = 0; s < total; ++s) {
      const double lr = lr_at(s, total, cfg);
      EXPECT_LE(lr, prev);
      prev = lr;
      values.insert(lr);
    }
    EXPECT_EQ(values.size(), 3u);
  }
}

TEST(Schedule, OutOfRangeStep) {
  TrainConfig cfg;
  EXPECT_THROW(lr_at(-1, 10, cfg), InputError);
  EXPECT_THROW(lr_at(10, 10, cfg), InputError);
  EXPECT_THROW(lr_at(0, 0, cfg), InputError);
}

TEST(Schedule, StepCounts) {
  EXPECT_EQ(steps_per_epoch(16, 8), 2);
  EXPECT_EQ(steps_per_epoch(17, 8), 3);
  TrainConfig cfg;
  EXPECT_EQ(total_steps(cfg, 30), 50 * 4);
  cfg.steps = 300;
  EXPECT_EQ(total_steps(cfg, 30), 300);
}

TEST(Config, RecipeDefaults) {
  const auto cfg = TrainConfig::for_backbone(BackboneName::kVitB);
  EXPECT_EQ(cfg.lr0, 1e-4);
  EXPECT_EQ(cfg.weight_decay, 0.001);
  EXPECT_EQ(cfg.beta1, 0.9);
  EXPECT_EQ(cfg.epochs, 50);
  EXPECT_EQ(cfg.gamma, 0.2);
  EXPECT_EQ(cfg.milestones, (std::array<double, 2>{0.3, 0.6}));
  EXPECT_EQ(default_batch_size(BackboneName::kVitS), 8);
  EXPECT_EQ(default_batch_size(BackboneName::kVitB), 4);
  EXPECT_EQ(default_batch_size(BackboneName::kVitL), 2);
  EXPECT_EQ(default_batch_size(BackboneName::kTiny), 8);
}

TEST(Config, TextRoundTripAndValidation) {
  auto cfg = TrainConfig::for_backbone(BackboneName::kTiny);
  cfg.seed = 12;
  cfg.adapter_enabled = false;
  cfg.steps = 77;
  const auto back = TrainConfig::parse(cfg.to_text());
  EXPECT_EQ(back.to_text(), cfg.to_text());
  EXPECT_EQ(back.seed, 12u);
  EXPECT_FALSE(back.adapter_enabled);
  EXPECT_THROW(TrainConfig::parse("gamma=1.5\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("milestones=0.6,0.3\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("lr0=0\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("no_such_key=1\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("this line has no equals sign\n"), ConfigError);
}

TEST(LossLog, RowFormat) {
  EXPECT_EQ(loss_log_header(), "step,lr,depth_loss,class_loss,total");
  StepLog row{3, 2e-5, total_loss(0.25, 1.5)};
  EXPECT_EQ(format_loss_row(row), "3,2e-05,0.25,1.5,1.75");
  StepLog off{4, 1e-4, total_loss(std::nullopt, 1.5)};
  EXPECT_EQ(format_loss_row(off), "4,0.0001,NA,1.5,1.5");
}

TEST(Trainer, RejectsMissingPseudoLabelsBeforeFirstStep) {
  const auto& set = small_set();
  OraclePseudoLabelProvider partial;
  partial.add(set.samples[0].tile_id, set.oracle.lookup(set.samples[0].tile_id).depth);
  EXPECT_THROW(Trainer(quick_config(2), set.samples, &partial), MissingLabelError);
  EXPECT_THROW(Trainer(quick_config(2), set.samples, nullptr), MissingLabelError);
  auto off = quick_config(2);
  off.prompter_enabled = false;
  EXPECT_NO_THROW(Trainer(off, set.samples, nullptr));
  EXPECT_THROW(Trainer(off, {}, nullptr), InputError);
}

TEST(Trainer, FrozenBackboneAndExactTotals) {
  const auto& set = small_set();
  Trainer t(quick_config(4), set.samples, &set.oracle);
  const auto before = backbone_checksum(t.model());
  const auto trainable_before = parameter_checksum(*t.model()->seg_decoder());
  while (!t.done()) {
    const auto log = t.step();
    ASSERT_TRUE(log.loss.depth_loss.has_value());
    EXPECT_EQ(log.loss.total, *log.loss.depth_loss + log.loss.class_loss);
    EXPECT_GE(*log.loss.depth_loss, 0.0);
    EXPECT_LE(*log.loss.depth_loss, 2.0);
  }
  EXPECT_EQ(backbone_checksum(t.model()), before);
  EXPECT_NE(parameter_checksum(*t.model()->seg_decoder()), trainable_before);
}

TEST(Trainer, PrompterOffDetachesDepth) {
  const auto& set = small_set();
  auto cfg = quick_config(2);
  cfg.prompter_enabled = false;
  Trainer t(cfg, set.samples, nullptr);
  const auto depth_before = parameter_checksum(*t.model()->depth_decoder());
  const auto log = t.step();
  EXPECT_FALSE(log.loss.depth_loss.has_value());
  EXPECT_EQ(log.loss.total, log.loss.class_loss);
  t.step();
  EXPECT_EQ(parameter_checksum(*t.model()->depth_decoder()), depth_before);
}

TEST(Trainer, DivergenceCarriesStepIndex) {
  const auto& set = small_set();
  Trainer t(quick_config(3), set.samples, &set.oracle);
  t.step();
  {
    torch::NoGradGuard g;
    for (auto& p : t.model()->seg_decoder()->named_parameters())
      if (p.key() == "classifier.bias") p.value().fill_(std::numeric_limits<float>::quiet_NaN());
  }
  try {
    t.step();
    FAIL() << "expected a divergence error";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 2);
  }
}

TEST(Trainer, ResumeReproducesTrajectory) {
  const auto& set = small_set();
  const auto cfg = quick_config(8);
  auto full = train(cfg, set.samples, &set.oracle);
  TrainOptions first;
  first.stop_after = 3;
  auto part = train(cfg, set.samples, &set.oracle, first);
  ASSERT_EQ(part.checkpoint.step, 3);

  TempDir dir("resume");
  part.checkpoint.save(dir / "c.dsck");
  TrainOptions second;
  second.resume = Checkpoint::load(dir / "c.dsck");
  auto rest = train(cfg, set.samples, &set.oracle, second);
  ASSERT_EQ(rest.log.size(), 5u);
  for (std::size_t i = 0; i < rest.log.size(); ++i) {
    const auto& a = full.log[i + 3];
    const auto& b = rest.log[i];
    EXPECT_EQ(a.step, b.step);
    EXPECT_NEAR(a.loss.total, b.loss.total, 1e-6);
    EXPECT_NEAR(*a.loss.depth_loss, *b.loss.depth_loss, 1e-6);
  }
  EXPECT_EQ(full.checkpoint.state, rest.checkpoint.state);
}

TEST(Trainer, ResumeRejectsOtherSchedule) {
  const auto& set = small_set();
  auto part = train(quick_config(4), set.samples, &set.oracle, TrainOptions{std::nullopt, 1, {}});
  Trainer t(quick_config(6), set.samples, &set.oracle);
  EXPECT_THROW(t.restore(part.checkpoint), ConfigError);
}

TEST(Checkpoint, RoundTrip) {
  const auto& set = small_set();
  auto r = train(quick_config(2), set.samples, &set.oracle);
  TempDir dir("ckpt");
  r.checkpoint.save(dir / "c.dsck");
  auto back = Checkpoint::load(dir / "c.dsck");
  EXPECT_EQ(back.step, 2);
  EXPECT_EQ(back.total_steps, 2);
  EXPECT_EQ(back.config.to_text(), r.checkpoint.config.to_text());
  EXPECT_EQ(back.state, r.checkpoint.state);
  EXPECT_EQ(back.history, r.checkpoint.history);
  bool has_optimizer_state = false;
  for (const auto& [name, _] : back.state.tensors) has_optimizer_state |= name.rfind("optim/", 0) == 0;
  EXPECT_TRUE(has_optimizer_state);

  auto model = model_from_checkpoint(back);
  std::vector<const Sample*> batch{&set.samples[0]};
  auto masks = predict(model, stack_images(batch));
  ASSERT_EQ(masks.size(), 1u);
  EXPECT_EQ(masks[0].height, 32);
  for (auto v : masks[0].classes) EXPECT_LT(v, kNumClasses);
  EXPECT_EQ(evaluate(model, set.samples).total(), 4u * 32u * 32u);
}

TEST(Ablation, FourRowsPerSeedWithSelfBaseline) {
  const auto& set = small_set();
  auto cfg = quick_config(1);
  const auto toggles = all_toggle_combinations();
  ASSERT_EQ(toggles.size(), 4u);
  auto table = run_ablation(cfg, toggles, {0, 1}, set.samples, set.samples, &set.oracle);
  ASSERT_EQ(table.rows.size(), 8u);
  for (const auto& row : table.rows) {
    ASSERT_TRUE(row.delta.has_value());
    if (!row.toggles.adapter_enabled && !row.toggles.prompter_enabled) {
      EXPECT_EQ(row.delta->mIoU, 0.0);
      EXPECT_EQ(row.delta->Kappa, 0.0);
      EXPECT_EQ(row.delta->OA, 0.0);
      EXPECT_EQ(row.delta->mF1, 0.0);
    }
  }
  ASSERT_EQ(table.means.size(), 4u);
  EXPECT_NEAR(table.means[0].second.mIoU, (table.rows[0].report.mIoU + table.rows[4].report.mIoU) / 2, 1e-15);
  const auto text = format_ablation_table(table);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 8 + 4);
  EXPECT_THROW(run_ablation(cfg, toggles, {}, set.samples, set.samples, &set.oracle), InputError);
}

}  // namespace
}  // namespace depthseg
