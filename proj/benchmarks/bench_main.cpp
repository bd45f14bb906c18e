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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include "depthseg/data.hpp"
#include "depthseg/losses.hpp"
#include "depthseg/metrics.hpp"
#include "depthseg/model.hpp"

namespace {

using namespace depthseg;

void BM_ModelForward(benchmark::State& state) {
  torch::set_num_threads(1);
  torch::NoGradGuard no_grad;
  const auto size = state.range(0);
  torch::manual_seed(0);
  DepthSegModel model(BackboneConfig::preset(BackboneName::kTiny), ModelToggles{});
  model->eval();
  const auto images = torch::rand({1, 3, size, size});
  for (auto _ : state) benchmark::DoNotOptimize(model->forward(images).logits);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ModelForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainStepLosses(benchmark::State& state) {
  torch::set_num_threads(1);
  torch::manual_seed(0);
  DepthSegModel model(BackboneConfig::preset(BackboneName::kTiny), ModelToggles{});
  model->train();
  const auto images = torch::rand({8, 3, 64, 64});
  const auto labels = torch::randint(0, kNumClasses, {8, 64, 64}, torch::kLong);
  DepthTargets targets;
  for (int s = 0; s < kDepthScales; ++s) targets.maps[s] = torch::rand({8, 1, 64 >> s, 64 >> s});
  for (auto _ : state) {
    auto out = model->forward(images);
    auto loss = depth_loss(*out.depth, targets) + class_loss(out.logits, labels);
    loss.backward();
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_TrainStepLosses)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  torch::set_num_threads(1);
  const auto size = state.range(0);
  torch::manual_seed(1);
  const auto x = torch::rand({8, 1, size, size});
  const auto y = torch::rand({8, 1, size, size});
  for (auto _ : state) benchmark::DoNotOptimize(ssim(x, y));
  state.SetItemsProcessed(state.iterations() * 8 * size * size);
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_MetricsAccumulate(benchmark::State& state) {
  const auto side = state.range(0);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  LabelMask pred(side, side), gt(side, side);
  for (auto& v : pred.classes) v = static_cast<std::uint8_t>(cls(rng));
  for (auto& v : gt.classes) v = static_cast<std::uint8_t>(cls(rng));
  for (auto _ : state) {
    ConfusionMatrix cm;
    accumulate(cm, pred, gt);
    benchmark::DoNotOptimize(compute_report(cm).mIoU);
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_MetricsAccumulate)->Arg(512)->Arg(2048);

void BM_SynthesizeScene(benchmark::State& state) {
  SynthOptions options;
  options.size = static_cast<int>(state.range(0));
  options.shadow_stress = true;
  std::int64_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_scene(scene_spec_for_tile(options, index++ % 64)));
}
BENCHMARK(BM_SynthesizeScene)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
