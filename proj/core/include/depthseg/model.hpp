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
#include <map>
#include <optional>
#include <string>

#include <torch/torch.h>

#include "depthseg/adapter.hpp"
#include "depthseg/backbone.hpp"
#include "depthseg/depth_branch.hpp"
#include "depthseg/prompter.hpp"
#include "depthseg/seg_decoder.hpp"

namespace depthseg {

struct ModelToggles {
  bool adapter_enabled = true;
  bool prompter_enabled = true;  // false also detaches the depth branch
};

struct ModelOutput {
  FeaturePyramid encoder;
  FeaturePyramid features;  // what the decoders consumed
  std::optional<DepthPyramid> depth;
  std::optional<PromptPyramid> prompts;
  torch::Tensor logits;
};

// Frozen backbone -> (adapter) -> depth decoder -> prompter -> segmentation decoder.
// Every submodule is always constructed, in a fixed order, so that parameter
// initialization for a given seed does not depend on the toggles.
class DepthSegModelImpl : public torch::nn::Module {
 public:
  DepthSegModelImpl(const BackboneConfig& cfg, ModelToggles toggles, int num_classes = kNumClasses);

  ModelOutput forward(const torch::Tensor& images);

  const ModelToggles& toggles() const { return toggles_; }
  void set_toggles(ModelToggles t) { toggles_ = t; }

  Backbone& backbone() { return backbone_; }
  Adapter& adapter() { return adapter_; }
  DepthDecoder& depth_decoder() { return depth_; }
  Prompter& prompter() { return prompter_; }
  SegDecoder& seg_decoder() { return seg_; }

  // Parameters the optimizer owns: everything except the backbone.
  std::vector<torch::Tensor> trainable_parameters() const;

 private:
  ModelToggles toggles_;
  Backbone backbone_{nullptr};
  Adapter adapter_{nullptr};
  DepthDecoder depth_{nullptr};
  Prompter prompter_{nullptr};
  SegDecoder seg_{nullptr};
};
TORCH_MODULE(DepthSegModel);

struct ParameterEntry {
  std::int64_t count = 0;
  bool trainable = false;
};

// Keys: backbone.encoder, backbone.reassemble, adapter, depth_decoder, prompter, seg_decoder.
std::map<std::string, ParameterEntry> parameter_report(DepthSegModel& model);

std::uint64_t backbone_checksum(DepthSegModel& model);

}  // namespace depthseg
