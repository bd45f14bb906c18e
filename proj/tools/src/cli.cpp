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

#include "depthseg_tools/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "depthseg/config.hpp"
#include "depthseg/data.hpp"
#include "depthseg/errors.hpp"
#include "depthseg/image_io.hpp"
#include "depthseg/metrics.hpp"
#include "depthseg/run_manifest.hpp"
#include "depthseg/trainer.hpp"

namespace depthseg::cli {
namespace fs = std::filesystem;

namespace {

std::string joined(const std::vector<std::string>& args) {
  std::string out = "depthseg";
  for (std::size_t i = 1; i < args.size(); ++i) out += ' ' + args[i];
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UnreadableFileError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UnreadableFileError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> class_names() {
  const auto& names = ClassSchema::land_cover().names;
  return {names.begin(), names.end()};
}

struct SynthArgs {
  fs::path out;
  std::int64_t tiles = 16;
  int size = 64;
  std::uint64_t seed = 1;
  bool shadow_stress = false;
};

int cmd_synth(const SynthArgs& a, const std::string& command) {
  if (a.size <= 0 || a.size % 32 != 0) throw ConfigError("--size must be a positive multiple of 32");
  if (a.tiles < 1) throw ConfigError("--tiles must be positive");
  ensure_dir(a.out);
  RunManifest manifest;
  manifest.command = command;
  manifest.seed = a.seed;
  manifest.config_text = "tiles=" + std::to_string(a.tiles) + "\nsize=" + std::to_string(a.size) +
                         "\nseed=" + std::to_string(a.seed) +
                         "\nshadow_stress=" + (a.shadow_stress ? "true" : "false") + "\n";
  const auto manifest_path = a.out / "run_manifest.txt";
  manifest.write(manifest_path);

  SynthOptions opts;
  opts.tiles = a.tiles;
  opts.size = a.size;
  opts.seed = a.seed;
  opts.shadow_stress = a.shadow_stress;
  synthesize_dataset(a.out, opts);

  const DatasetLayout layout{a.out};
  for (const auto& sub : {"images", "masks", "depth"}) manifest.add_output(a.out / sub);
  manifest.add_output(layout.manifest());
  manifest.write(manifest_path);
  std::cout << "wrote " << a.tiles << " tiles to " << a.out.string() << '\n';
  return 0;
}

struct TrainArgs {
  fs::path config, data, out;
  bool no_adapter = false, no_prompter = false;
  std::optional<std::int64_t> steps;
  std::optional<std::int64_t> stop_after;
  std::optional<fs::path> resume;
};

int cmd_train(const TrainArgs& a, const std::string& command) {
  auto cfg = TrainConfig::from_file(a.config);
  if (a.no_adapter) cfg.adapter_enabled = false;
  if (a.no_prompter) cfg.prompter_enabled = false;
  if (a.steps) cfg.steps = *a.steps;
  cfg.validate();

  ensure_dir(a.out);
  RunManifest manifest;
  manifest.command = command;
  manifest.seed = cfg.seed;
  manifest.config_text = cfg.to_text();
  manifest.add_input(a.config);
  const DatasetLayout layout{a.data};
  manifest.add_input(layout.manifest());
  if (a.resume) manifest.add_input(*a.resume);
  const auto manifest_path = a.out / "run_manifest.txt";
  manifest.write(manifest_path);

  const auto samples = load_split(layout, "train", /*require_depth=*/false);
  std::optional<FilePseudoLabelProvider> provider;
  if (cfg.prompter_enabled) provider.emplace(a.data);

  TrainOptions options;
  if (a.resume) options.resume = Checkpoint::load(*a.resume);
  options.stop_after = a.stop_after;
  const auto log_path = a.out / "loss_log.csv";
  // A resumed run keeps the rows up to the checkpoint step and appends after them.
  std::vector<std::string> kept;
  if (options.resume && fs::exists(log_path)) {
    std::ifstream in(log_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (std::stoll(line.substr(0, line.find(','))) <= options.resume->step) kept.push_back(line);
    }
  }
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw UnreadableFileError("cannot write " + log_path.string());
  log << loss_log_header() << '\n';
  for (const auto& line : kept) log << line << '\n';
  options.on_step = [&](const StepLog& row) { log << format_loss_row(row) << '\n'; };

  auto result = train(cfg, samples, provider ? &*provider : nullptr, options);
  log.close();
  const auto ckpt_path = a.out / "checkpoint.dsck";
  result.checkpoint.save(ckpt_path);
  write_text(a.out / "train_report.txt", format_report(result.train_report, class_names()));

  manifest.add_output(ckpt_path);
  manifest.add_output(log_path);
  manifest.add_output(a.out / "train_report.txt");
  manifest.write(manifest_path);
  std::cout << "trained " << result.checkpoint.step << '/' << result.checkpoint.total_steps
            << " steps, train mIoU " << result.train_report.mIoU << '\n';
  return 0;
}

struct EvalArgs {
  std::optional<fs::path> checkpoint;
  fs::path data;
  std::string split = "test";
  std::optional<fs::path> predictions;
  fs::path out;
};

int cmd_eval(const EvalArgs& a, const std::string& command) {
  if (!a.checkpoint && !a.predictions) throw ConfigError("eval needs --checkpoint or --predictions");
  RunManifest manifest;
  manifest.command = command;
  const DatasetLayout layout{a.data};
  manifest.add_input(layout.manifest());
  if (a.checkpoint) manifest.add_input(*a.checkpoint);
  if (a.predictions) manifest.add_input(*a.predictions);
  const fs::path manifest_path = a.out.string() + ".manifest.txt";
  if (a.out.has_parent_path()) ensure_dir(a.out.parent_path());
  manifest.write(manifest_path);

  const auto samples = load_split(layout, a.split, /*require_depth=*/false);
  ConfusionMatrix cm;
  if (a.predictions) {
    for (const auto& s : samples) {
      const auto pred = read_mask_png(*a.predictions / (s.tile_id + ".png"));
      if (pred.height != s.mask.height || pred.width != s.mask.width)
        throw ShapeMismatchError("prediction for '" + s.tile_id + "' does not match its mask");
      accumulate(cm, pred, s.mask);
    }
  } else {
    const auto ckpt = Checkpoint::load(*a.checkpoint);
    manifest.seed = ckpt.config.seed;
    manifest.config_text = ckpt.config.to_text();
    auto model = model_from_checkpoint(ckpt);
    cm = evaluate(model, samples);
  }
  const auto report = compute_report(cm);
  write_text(a.out, format_report(report, class_names()));
  manifest.add_output(a.out);
  manifest.write(manifest_path);
  std::cout << "mIoU=" << report.mIoU << " OA=" << report.OA << " Kappa=" << report.Kappa << '\n';
  return 0;
}

struct PredictArgs {
  fs::path checkpoint, input, output;
  bool color = false;
};

int cmd_predict(const PredictArgs& a, const std::string& command) {
  RunManifest manifest;
  manifest.command = command;
  manifest.add_input(a.checkpoint);
  manifest.add_input(a.input);
  const fs::path manifest_path = a.output.string() + ".manifest.txt";
  if (a.output.has_parent_path()) ensure_dir(a.output.parent_path());
  manifest.write(manifest_path);

  const auto ckpt = Checkpoint::load(a.checkpoint);
  manifest.seed = ckpt.config.seed;
  manifest.config_text = ckpt.config.to_text();
  const auto image = read_image_tile(a.input);
  auto model = model_from_checkpoint(ckpt);
  const auto mask = predict(model, image.unsqueeze(0)).front();
  if (a.color) write_png(a.output, ClassSchema::land_cover().render(mask));
  else write_mask_png(a.output, mask);
  manifest.add_output(a.output);
  manifest.write(manifest_path);
  return 0;
}

struct AblateArgs {
  fs::path config, data, out;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string eval_split = "val";
  bool pair_only = false;
  std::optional<std::int64_t> steps;
};

int cmd_ablate(const AblateArgs& a, const std::string& command) {
  auto cfg = TrainConfig::from_file(a.config);
  if (a.steps) cfg.steps = *a.steps;
  cfg.validate();
  ensure_dir(a.out);
  RunManifest manifest;
  manifest.command = command;
  manifest.seed = cfg.seed;
  manifest.config_text = cfg.to_text();
  manifest.add_input(a.config);
  const DatasetLayout layout{a.data};
  manifest.add_input(layout.manifest());
  const auto manifest_path = a.out / "run_manifest.txt";
  manifest.write(manifest_path);

  const auto train_set = load_split(layout, "train", false);
  const auto eval_set = load_split(layout, a.eval_split, false);
  FilePseudoLabelProvider provider(a.data);
  const auto toggles = a.pair_only ? std::vector<ModelToggles>{{false, false}, {true, true}}
                                   : all_toggle_combinations();
  const auto table = run_ablation(cfg, toggles, a.seeds, train_set, eval_set, &provider,
                                  [](const AblationRow& row) {
                                    std::cout << "seed " << row.seed << " adapter="
                                              << row.toggles.adapter_enabled
                                              << " prompter=" << row.toggles.prompter_enabled
                                              << " mIoU=" << row.report.mIoU << std::endl;
                                  });
  const auto table_path = a.out / "ablation.tsv";
  write_text(table_path, format_ablation_table(table));
  manifest.add_output(table_path);
  manifest.write(manifest_path);
  std::cout << format_ablation_table(table);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Depth-prompted land-cover segmentation: synthesis, training, evaluation, prediction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic tile dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--tiles", synth.tiles, "Number of tiles");
  synth_cmd->add_option("--size", synth.size, "Tile size in pixels (multiple of 32)");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_flag("--shadow-stress", synth.shadow_stress, "Dense buildings under a low sun");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on the train split of a dataset");
  train_cmd->add_option("--config", tr.config, "Training config file")->required();
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_flag("--no-adapter", tr.no_adapter, "Bypass the adapter");
  train_cmd->add_flag("--no-prompter", tr.no_prompter, "Detach the depth branch and prompter");
  train_cmd->add_option("--steps", tr.steps, "Total optimizer steps (overrides epochs)");
  train_cmd->add_option("--stop-after", tr.stop_after, "Stop once this many steps are done");
  train_cmd->add_option("--resume", tr.resume, "Checkpoint to resume from");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint or saved predictions on a split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file");
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--split", ev.split, "Split name (train, val, test)");
  eval_cmd->add_option("--predictions", ev.predictions, "Directory of <id>.png index masks");
  eval_cmd->add_option("--out", ev.out, "Report file")->required();

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Segment one image tile");
  predict_cmd->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--input", pr.input, "RGB PNG tile")->required();
  predict_cmd->add_option("--output", pr.output, "Output PNG")->required();
  predict_cmd->add_flag("--color", pr.color, "Write a palette rendering instead of class indices");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train every adapter/prompter toggle combination");
  ablate_cmd->add_option("--config", ab.config, "Training config file")->required();
  ablate_cmd->add_option("--data", ab.data, "Dataset directory")->required();
  ablate_cmd->add_option("--out", ab.out, "Output directory")->required();
  ablate_cmd->add_option("--seeds", ab.seeds, "Seeds")->delimiter(',');
  ablate_cmd->add_option("--eval-split", ab.eval_split, "Held-out split");
  ablate_cmd->add_option("--steps", ab.steps, "Total optimizer steps per run");
  ablate_cmd->add_flag("--pair-only", ab.pair_only, "Only the all-off and all-on combinations");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  const auto command = joined(args);
  try {
    if (synth_cmd->parsed()) return cmd_synth(synth, command);
    if (train_cmd->parsed()) return cmd_train(tr, command);
    if (eval_cmd->parsed()) return cmd_eval(ev, command);
    if (predict_cmd->parsed()) return cmd_predict(pr, command);
    if (ablate_cmd->parsed()) return cmd_ablate(ab, command);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (step " << e.step() << ")\n";
    return static_cast<int>(ExitCode::kDivergence);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(exit_code_for(e.kind()));
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInternal);
  }
  return static_cast<int>(ExitCode::kInternal);
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace depthseg::cli
