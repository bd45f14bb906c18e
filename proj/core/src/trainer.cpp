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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "depthseg/errors.hpp"

namespace depthseg {

std::int64_t milestone_step(double fraction, std::int64_t total_steps) {
  // The epsilon keeps products such as 0.3 * 10 = 3.0000000000000004 on the right side.
  return static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(total_steps) - 1e-9));
}

double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg) {
  if (total_steps <= 0 || step < 0 || step >= total_steps)
    throw InputError("lr_at: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(total_steps) + ")");
  int decays = 0;
  for (double m : cfg.milestones)
    if (step >= milestone_step(m, total_steps)) ++decays;
  // Dividing by the reciprocal keeps 1e-4 * 0.2^2 at exactly 4e-6.
  return decays == 0 ? cfg.lr0 : cfg.lr0 / std::pow(1.0 / cfg.gamma, decays);
}

std::int64_t steps_per_epoch(std::int64_t samples, std::int64_t batch_size) {
  return (samples + batch_size - 1) / batch_size;
}

std::int64_t total_steps(const TrainConfig& cfg, std::int64_t samples) {
  if (cfg.steps) return *cfg.steps;
  return cfg.epochs * steps_per_epoch(samples, cfg.batch_size);
}

std::string loss_log_header() { return "step,lr,depth_loss,class_loss,total"; }

std::string format_loss_row(const StepLog& row) {
  char buf[256];
  char depth[64] = "NA";
  if (row.loss.depth_loss) std::snprintf(depth, sizeof(depth), "%.10g", *row.loss.depth_loss);
  std::snprintf(buf, sizeof(buf), "%lld,%.10g,%s,%.10g,%.10g", static_cast<long long>(row.step), row.lr,
                depth, row.loss.class_loss, row.loss.total);
  return buf;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

torch::Tensor cat_targets(const std::vector<DepthTargets>& all, const std::vector<std::size_t>& idx, int s) {
  std::vector<torch::Tensor> maps;
  for (auto i : idx) maps.push_back(all[i].maps[s]);
  return torch::cat(maps, 0);
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  TensorArchive archive = state;
  std::ostringstream meta;
  meta << "format=depthseg-checkpoint\n"
       << "step=" << step << '\n'
       << "total_steps=" << total_steps << '\n';
  for (const auto& [k, v] : history) meta << "history." << k << '=' << fmt17(v) << '\n';
  std::istringstream cfg(config.to_text());
  for (std::string line; std::getline(cfg, line);)
    if (!line.empty()) meta << "config." << line << '\n';
  archive.header = meta.str();
  archive.save(path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  Checkpoint c;
  c.state = TensorArchive::load(path);
  const auto kv = parse_key_values(c.state.header);
  if (auto it = kv.find("format"); it == kv.end() || it->second != "depthseg-checkpoint")
    throw ConfigError("not a depthseg checkpoint: " + path.string());
  std::ostringstream cfg;
  for (const auto& [k, v] : kv) {
    if (k == "step") c.step = std::stoll(v);
    else if (k == "total_steps") c.total_steps = std::stoll(v);
    else if (k.rfind("config.", 0) == 0) cfg << k.substr(7) << '=' << v << '\n';
  }
  c.config = TrainConfig::parse(cfg.str());
  // History keeps file order and repeated names.
  std::istringstream lines(c.state.header);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (line.rfind("history.", 0) == 0 && eq != std::string::npos)
      c.history.emplace_back(line.substr(8, eq - 8), std::stod(line.substr(eq + 1)));
  }
  c.state.header.clear();
  return c;
}

DepthSegModel model_from_checkpoint(const Checkpoint& ckpt) {
  auto bcfg = ckpt.config.backbone_config();
  bcfg.pretrained_weights.reset();  // weights come from the checkpoint itself
  torch::manual_seed(ckpt.config.seed);
  DepthSegModel model(bcfg, ModelToggles{ckpt.config.adapter_enabled, ckpt.config.prompter_enabled});
  load_module_state(*model, ckpt.state, "model/");
  model->eval();
  return model;
}

Trainer::Trainer(TrainConfig cfg, std::vector<Sample> train_set, const PseudoLabelProvider* provider)
    : cfg_(std::move(cfg)), train_(std::move(train_set)) {
  cfg_.validate();
  if (train_.empty()) throw InputError("training set is empty");
  torch::set_num_threads(1);

  if (cfg_.prompter_enabled) {
    if (provider == nullptr) throw MissingLabelError("depth branch enabled but no pseudo-label provider");
    for (const auto& s : train_) {
      if (!provider->contains(s.tile_id))
        throw MissingLabelError("no pseudo-label for training tile '" + s.tile_id + "'");
    }
    for (const auto& s : train_) targets_.push_back(fetch_pseudo_label(*provider, s.tile_id));
  }

  torch::manual_seed(cfg_.seed);
  model_ = DepthSegModel(cfg_.backbone_config(), ModelToggles{cfg_.adapter_enabled, cfg_.prompter_enabled});
  if (!targets_.empty()) {
    double sum = 0.0;
    for (const auto& t : targets_) sum += t.maps[0].mean().item<double>();
    const double mean = std::clamp(sum / static_cast<double>(targets_.size()), 0.01, 0.99);
    model_->depth_decoder()->set_output_prior(mean);
  }
  for (const auto& item : model_->named_parameters()) {
    if (item.value().requires_grad()) named_trainable_.emplace_back(item.key(), item.value());
  }
  std::vector<torch::Tensor> params;
  for (const auto& [name, p] : named_trainable_) params.push_back(p);
  optimizer_ = std::make_unique<torch::optim::AdamW>(
      params, torch::optim::AdamWOptions(cfg_.lr0)
                  .betas({cfg_.beta1, cfg_.beta2})
                  .eps(cfg_.eps)
                  .weight_decay(cfg_.weight_decay));
  total_steps_ = total_steps(cfg_, static_cast<std::int64_t>(train_.size()));
}

std::vector<std::size_t> Trainer::batch_indices(std::int64_t step) const {
  const auto n = static_cast<std::int64_t>(train_.size());
  const auto spe = steps_per_epoch(n, cfg_.batch_size);
  const auto epoch = step / spe;
  const auto batch = step % spe;
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix(cfg_.seed) ^ mix(static_cast<std::uint64_t>(epoch) + 0x51ed27ull));
  std::shuffle(order.begin(), order.end(), rng);
  const auto begin = batch * cfg_.batch_size;
  const auto end = std::min(n, begin + cfg_.batch_size);
  return {order.begin() + begin, order.begin() + end};
}

StepLog Trainer::step() {
  if (done()) throw InputError("training already finished");
  const auto idx = batch_indices(step_);
  std::vector<const Sample*> batch;
  for (auto i : idx) batch.push_back(&train_[i]);

  const double lr = lr_at(step_, total_steps_, cfg_);
  for (auto& group : optimizer_->param_groups())
    static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);

  model_->train();
  auto out = model_->forward(stack_images(batch));
  auto lcls = class_loss(out.logits, stack_labels(batch));
  torch::Tensor total = lcls;
  std::optional<double> depth_value;
  if (out.depth) {
    DepthTargets targets;
    for (int s = 0; s < kDepthScales; ++s) targets.maps[s] = cat_targets(targets_, idx, s);
    SsimParams sp;
    sp.window = cfg_.ssim_window;
    auto ld = depth_loss(*out.depth, targets, sp);
    depth_value = ld.item<double>();
    total = ld + lcls;
  }
  const double cls_value = lcls.item<double>();
  if (!std::isfinite(cls_value) || (depth_value && !std::isfinite(*depth_value)))
    throw DivergenceError(step_ + 1, "non-finite loss at step " + std::to_string(step_ + 1));

  optimizer_->zero_grad();
  total.backward();
  optimizer_->step();
  ++step_;
  return {step_, lr, total_loss(depth_value, cls_value)};
}

Checkpoint Trainer::checkpoint(std::vector<std::pair<std::string, double>> history) const {
  Checkpoint c;
  c.config = cfg_;
  c.step = step_;
  c.total_steps = total_steps_;
  c.history = std::move(history);
  store_module_state(*model_, c.state, "model/");
  auto& state = optimizer_->state();
  for (const auto& [name, p] : named_trainable_) {
    auto it = state.find(p.unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& st = static_cast<const torch::optim::AdamWParamState&>(*it->second);
    c.state.tensors["optim/" + name + "/exp_avg"] = st.exp_avg().clone();
    c.state.tensors["optim/" + name + "/exp_avg_sq"] = st.exp_avg_sq().clone();
    c.state.tensors["optim/" + name + "/step"] = torch::tensor({st.step()}, torch::kInt64);
  }
  return c;
}

void Trainer::restore(const Checkpoint& ckpt) {
  if (ckpt.total_steps != total_steps_)
    throw ConfigError("checkpoint was written for " + std::to_string(ckpt.total_steps) +
                      " total steps, this run has " + std::to_string(total_steps_));
  load_module_state(*model_, ckpt.state, "model/");
  auto& state = optimizer_->state();
  state.clear();
  for (const auto& [name, p] : named_trainable_) {
    auto it = ckpt.state.tensors.find("optim/" + name + "/exp_avg");
    if (it == ckpt.state.tensors.end()) continue;
    auto st = std::make_unique<torch::optim::AdamWParamState>();
    st->exp_avg(it->second.clone());
    st->exp_avg_sq(ckpt.state.tensors.at("optim/" + name + "/exp_avg_sq").clone());
    st->step(ckpt.state.tensors.at("optim/" + name + "/step").item<std::int64_t>());
    state[p.unsafeGetTensorImpl()] = std::move(st);
  }
  step_ = ckpt.step;
}

std::vector<LabelMask> predict(DepthSegModel& model, const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  model->eval();
  return to_label_masks(predict_mask(model->forward(images).logits));
}

ConfusionMatrix evaluate(DepthSegModel& model, const std::vector<Sample>& samples, std::int64_t batch_size) {
  ConfusionMatrix cm;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    std::vector<const Sample*> batch;
    for (std::size_t i = begin; i < std::min(samples.size(), begin + batch_size); ++i)
      batch.push_back(&samples[i]);
    const auto masks = predict(model, stack_images(batch));
    for (std::size_t i = 0; i < batch.size(); ++i) accumulate(cm, masks[i], batch[i]->mask);
  }
  return cm;
}

TrainResult train(const TrainConfig& cfg, const std::vector<Sample>& dataset,
                  const PseudoLabelProvider* provider, const TrainOptions& options) {
  Trainer trainer(cfg, dataset, provider);
  if (options.resume) trainer.restore(*options.resume);
  TrainResult result;
  while (!trainer.done() && (!options.stop_after || trainer.current_step() < *options.stop_after)) {
    result.log.push_back(trainer.step());
    if (options.on_step) options.on_step(result.log.back());
  }
  result.train_report = compute_report(evaluate(trainer.model(), trainer.train_set()));
  result.checkpoint = trainer.checkpoint({{"train_mIoU", result.train_report.mIoU},
                                          {"train_Kappa", result.train_report.Kappa},
                                          {"train_OA", result.train_report.OA}});
  return result;
}

std::vector<ModelToggles> all_toggle_combinations() {
  return {{false, false}, {true, false}, {false, true}, {true, true}};
}

namespace {

MetricReport subtract(const MetricReport& a, const MetricReport& b) {
  MetricReport d;
  d.mPre = a.mPre - b.mPre;
  d.mRecall = a.mRecall - b.mRecall;
  d.mF1 = a.mF1 - b.mF1;
  d.mIoU = a.mIoU - b.mIoU;
  d.OA = a.OA - b.OA;
  d.Kappa = a.Kappa - b.Kappa;
  d.pixel_accuracy = a.pixel_accuracy - b.pixel_accuracy;
  return d;
}

bool same(const ModelToggles& a, const ModelToggles& b) {
  return a.adapter_enabled == b.adapter_enabled && a.prompter_enabled == b.prompter_enabled;
}

}  // namespace

AblationTable run_ablation(const TrainConfig& base, const std::vector<ModelToggles>& toggles,
                           const std::vector<std::uint64_t>& seeds, const std::vector<Sample>& train_set,
                           const std::vector<Sample>& eval_set, const PseudoLabelProvider* provider,
                           const std::function<void(const AblationRow&)>& on_row) {
  if (seeds.empty()) throw InputError("ablation needs at least one seed");
  if (toggles.empty()) throw InputError("ablation needs at least one toggle combination");
  AblationTable table;
  for (auto seed : seeds) {
    const auto first = table.rows.size();
    for (const auto& t : toggles) {
      auto cfg = base;
      cfg.seed = seed;
      cfg.adapter_enabled = t.adapter_enabled;
      cfg.prompter_enabled = t.prompter_enabled;
      Trainer trainer(cfg, train_set, provider);
      while (!trainer.done()) trainer.step();
      AblationRow row;
      row.seed = seed;
      row.toggles = t;
      row.report = compute_report(evaluate(trainer.model(), eval_set));
      table.rows.push_back(row);
    }
    const AblationRow* baseline = nullptr;
    for (auto i = first; i < table.rows.size(); ++i)
      if (same(table.rows[i].toggles, {false, false})) baseline = &table.rows[i];
    for (auto i = first; i < table.rows.size(); ++i) {
      if (baseline) table.rows[i].delta = subtract(table.rows[i].report, baseline->report);
      if (on_row) on_row(table.rows[i]);
    }
  }
  for (const auto& t : toggles) {
    MetricReport mean;
    double n = 0;
    for (const auto& row : table.rows) {
      if (!same(row.toggles, t)) continue;
      mean.mPre += row.report.mPre;
      mean.mRecall += row.report.mRecall;
      mean.mF1 += row.report.mF1;
      mean.mIoU += row.report.mIoU;
      mean.OA += row.report.OA;
      mean.Kappa += row.report.Kappa;
      mean.pixel_accuracy += row.report.pixel_accuracy;
      n += 1;
    }
    mean.mPre /= n;
    mean.mRecall /= n;
    mean.mF1 /= n;
    mean.mIoU /= n;
    mean.OA /= n;
    mean.Kappa /= n;
    mean.pixel_accuracy /= n;
    table.means.emplace_back(t, mean);
  }
  return table;
}

std::string format_ablation_table(const AblationTable& table) {
  std::ostringstream os;
  char buf[256];
  auto mark = [](bool on) { return on ? "yes" : "no"; };
  auto cell = [&](double v, const std::optional<double>& d) {
    if (d) std::snprintf(buf, sizeof(buf), "%6.2f(%+.2f)", 100.0 * v, 100.0 * *d);
    else std::snprintf(buf, sizeof(buf), "%6.2f", 100.0 * v);
    return std::string(buf);
  };
  os << "seed\tadapter\tprompter\tmF1\tmIoU\tOA\tKappa\n";
  for (const auto& r : table.rows) {
    auto d = [&](double MetricReport::*m) -> std::optional<double> {
      if (!r.delta) return std::nullopt;
      return (*r.delta).*m;
    };
    os << r.seed << '\t' << mark(r.toggles.adapter_enabled) << '\t' << mark(r.toggles.prompter_enabled)
       << '\t' << cell(r.report.mF1, d(&MetricReport::mF1)) << '\t'
       << cell(r.report.mIoU, d(&MetricReport::mIoU)) << '\t' << cell(r.report.OA, d(&MetricReport::OA))
       << '\t' << cell(r.report.Kappa, d(&MetricReport::Kappa)) << '\n';
  }
  for (const auto& [t, m] : table.means) {
    os << "mean\t" << mark(t.adapter_enabled) << '\t' << mark(t.prompter_enabled) << '\t'
       << cell(m.mF1, std::nullopt) << '\t' << cell(m.mIoU, std::nullopt) << '\t'
       << cell(m.OA, std::nullopt) << '\t' << cell(m.Kappa, std::nullopt) << '\n';
  }
  return os.str();
}

}  // namespace depthseg
