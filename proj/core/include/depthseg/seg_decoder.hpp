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
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "depthseg/label_mask.hpp"
#include "depthseg/pyramids.hpp"

namespace depthseg {

// Concatenate-then-project fusion of one (f_i, psi_i) pair back to f_i's width, stored as
// the projection's two column blocks. The prompt block starts at zero.
class PromptFusionImpl : public torch::nn::Module {
 public:
  explicit PromptFusionImpl(int channels);
  torch::Tensor forward(const torch::Tensor& f, const std::optional<torch::Tensor>& psi);

  torch::nn::Conv2d& feature_columns() { return feature_; }
  torch::nn::Conv2d& prompt_columns() { return prompt_; }

 private:
  torch::nn::Conv2d feature_{nullptr}, prompt_{nullptr};
};
TORCH_MODULE(PromptFusion);

// Input layer (level 3), three intermediate layers (levels 2, 1, 0, each after a 2x
// upsample), and an output layer (bilinear 4x upsample, 1x1 conv to class scores).
// Fused levels are lifted to a common `width` and added to the upsampled coarser path.
class SegDecoderImpl : public torch::nn::Module {
 public:
  SegDecoderImpl(const std::array<int, kPyramidLevels>& channels, int num_classes = kNumClasses,
                 int width = kDefaultWidth);

  static constexpr int kDefaultWidth = 256;

  // Returns N x num_classes x H x W logits.
  torch::Tensor forward(const FeaturePyramid& f, const std::optional<PromptPyramid>& psi);

  PromptFusion& fusion(int level) { return fusion_[level]; }
  int num_classes() const { return num_classes_; }
  int width() const { return width_; }

 private:
  std::array<int, kPyramidLevels> channels_;
  int num_classes_;
  int width_;
  std::array<PromptFusion, kPyramidLevels> fusion_{nullptr, nullptr, nullptr, nullptr};
  std::array<torch::nn::Sequential, kPyramidLevels> layers_;
  // lift_[i] maps fused level i to the decoder width.
  std::array<torch::nn::Conv2d, kPyramidLevels> lift_{nullptr, nullptr, nullptr, nullptr};
  torch::nn::Conv2d classifier_{nullptr};
};
TORCH_MODULE(SegDecoder);

torch::Tensor decode_semantics(SegDecoder& decoder, const FeaturePyramid& f,
                               const std::optional<PromptPyramid>& psi);

// Per-pixel argmax, smallest index wins ties. logits: N x K x H x W -> N x H x W uint8.
torch::Tensor predict_mask(const torch::Tensor& logits);

// Splits an N x H x W uint8 tensor into masks.
std::vector<LabelMask> to_label_masks(const torch::Tensor& masks);

}  // namespace depthseg
