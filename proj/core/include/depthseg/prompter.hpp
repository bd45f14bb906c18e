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

#include <array>

#include <torch/torch.h>

#include "depthseg/backbone.hpp"
#include "depthseg/pyramids.hpp"

namespace depthseg {

// Prompt widths mirror the feature pyramid level for level.
std::array<int, kPyramidLevels> prompt_channels(const BackboneConfig& cfg);

// Residual encoding block: out = z + transform(z), transform = conv-BN-ReLU-conv.
class PromptBlockImpl : public torch::nn::Module {
 public:
  explicit PromptBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& z);

  // Zeroes every transform weight and bias, turning the block into the identity.
  void zero_transform();

 private:
  torch::nn::Sequential transform_;
};
TORCH_MODULE(PromptBlock);

// Turns the three-scale depth maps into four-scale depth prompts.
//
// The depth maps are stacked at stride 2 (the full-resolution map is average pooled, the
// stride-4 map nearest-upsampled) and a shallow stride-2 conv block brings them to stride 4.
// Deep block i then receives the 2x-pooled output of block i-1 (projected to its width)
// plus the shallow output pooled to its stride, and emits prompt level i.
class PrompterImpl : public torch::nn::Module {
 public:
  explicit PrompterImpl(const std::array<int, kPyramidLevels>& channels);

  PromptPyramid forward(const DepthPyramid& depth);

  PromptBlock& block(int level) { return blocks_[level]; }

 private:
  std::array<int, kPyramidLevels> channels_;
  torch::nn::Sequential shallow_;
  std::array<PromptBlock, kPyramidLevels> blocks_{nullptr, nullptr, nullptr, nullptr};
  // Index 0 unused: the first deep block consumes the shallow output directly.
  std::array<torch::nn::Conv2d, kPyramidLevels> transmit_{nullptr, nullptr, nullptr, nullptr};
  std::array<torch::nn::Conv2d, kPyramidLevels> skip_{nullptr, nullptr, nullptr, nullptr};
};
TORCH_MODULE(Prompter);

PromptPyramid encode_prompts(Prompter& prompter, const DepthPyramid& depth);

}  // namespace depthseg
