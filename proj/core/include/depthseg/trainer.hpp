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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "depthseg/config.hpp"
#include "depthseg/data.hpp"
#include "depthseg/depth_branch.hpp"
#include "depthseg/losses.hpp"
#include "depthseg/metrics.hpp"
#include "depthseg/model.hpp"
#include "depthseg/tensor_archive.hpp"

namespace depthseg {

// Piecewise-constant multi-step schedule: lr0 before ceil(m0*T), lr0*gamma before
// ceil(m1*T), lr0*gamma^2 afterwards. Throws InputError when step is outside [0, T).
double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg);
std::int64_t milestone_step(double fraction, std::int64_t total_steps);

std::int64_t steps_per_epoch(std::int64_t samples, std::int64_t batch_size);
std::int64_t total_steps(const TrainConfig& cfg, std::int64_t samples);

struct StepLog {
  std::int64_t step = 0;  // 1-based index of the optimizer step just taken
  double lr = 0.0;
  LossReport loss;
};

// `step,lr,depth_loss,class_loss,total`; depth_loss is `NA` when the depth branch is off.
std::string loss_log_header();
std::string format_loss_row(const StepLog& row);

struct Checkpoint {
  TrainConfig config;
  std::int64_t step = 0;
  std::int64_t total_steps = 0;
  std::vector<std::pair<std::string, double>> history;
  // model/<param or buffer name>, optim/<param name>/{exp_avg,exp_avg_sq}, optim/<name>/step
  TensorArchive state;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

// Builds a model for `ckpt.config` and loads its weights; inference only.
DepthSegModel model_from_checkpoint(const Checkpoint& ckpt);

class Trainer {
 public:
  // The provider may be null only when cfg.prompter_enabled is false. Every training tile
  // must be covered by it, otherwise MissingLabelError is thrown here, before any step.
  Trainer(TrainConfig cfg, std::vector<Sample> train_set, const PseudoLabelProvider* provider);

  void restore(const Checkpoint& ckpt);
  StepLog step();  // DivergenceError on a non-finite loss
  bool done() const { return step_ >= total_steps_; }
  std::int64_t current_step() const { return step_; }
  std::int64_t total() const { return total_steps_; }

  Checkpoint checkpoint(std::vector<std::pair<std::string, double>> history = {}) const;
  DepthSegModel& model() { return model_; }
  const std::vector<Sample>& train_set() const { return train_; }

 private:
  std::vector<std::size_t> batch_indices(std::int64_t step) const;

  TrainConfig cfg_;
  std::vector<Sample> train_;
  std::vector<DepthTargets> targets_;
  DepthSegModel model_{nullptr};
  std::unique_ptr<torch::optim::AdamW> optimizer_;
  std::vector<std::pair<std::string, torch::Tensor>> named_trainable_;
  std::int64_t step_ = 0;
  std::int64_t total_steps_ = 0;
};

struct TrainOptions {
  std::optional<Checkpoint> resume;
  std::optional<std::int64_t> stop_after;  // stop once this many total steps are done
  std::function<void(const StepLog&)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepLog> log;
  MetricReport train_report;
};

TrainResult train(const TrainConfig& cfg, const std::vector<Sample>& dataset,
                  const PseudoLabelProvider* provider, const TrainOptions& options = {});

// Inference over samples in batches, in eval mode.
ConfusionMatrix evaluate(DepthSegModel& model, const std::vector<Sample>& samples,
                         std::int64_t batch_size = 8);
std::vector<LabelMask> predict(DepthSegModel& model, const torch::Tensor& images);

struct AblationRow {
  std::uint64_t seed = 0;
  ModelToggles toggles;
  MetricReport report;
  // Against the (adapter off, prompter off) row of the same seed, when present.
  std::optional<MetricReport> delta;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  // Mean over seeds per toggle combination, same order as the requested toggles.
  std::vector<std::pair<ModelToggles, MetricReport>> means;
};

std::vector<ModelToggles> all_toggle_combinations();

// Trains every toggle combination per seed on identical data and evaluates on `eval_set`.
AblationTable run_ablation(const TrainConfig& base, const std::vector<ModelToggles>& toggles,
                           const std::vector<std::uint64_t>& seeds, const std::vector<Sample>& train_set,
                           const std::vector<Sample>& eval_set, const PseudoLabelProvider* provider,
                           const std::function<void(const AblationRow&)>& on_row = {});

std::string format_ablation_table(const AblationTable& table);

}  // namespace depthseg
