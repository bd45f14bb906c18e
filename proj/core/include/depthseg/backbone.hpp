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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <torch/torch.h>

#include "depthseg/pyramids.hpp"

namespace depthseg {

enum class BackboneName { kTiny, kVitS, kVitB, kVitL };

std::string_view to_string(BackboneName name);
BackboneName backbone_name_from_string(std::string_view s);

struct BackboneConfig {
  BackboneName name = BackboneName::kTiny;
  int patch_size = 8;
  int embed_dim = 64;
  int depth = 8;
  int num_heads = 4;
  std::array<int, kPyramidLevels> tap_indices{1, 3, 5, 7};
  std::array<int, kPyramidLevels> reassembly_channels{32, 64, 128, 256};
  // Tile edge the position embedding table is laid out for; other sizes interpolate.
  int reference_size = 64;
  std::optional<std::filesystem::path> pretrained_weights;

  static BackboneConfig preset(BackboneName name);

  // Throws ConfigError when an invariant does not hold.
  void validate() const;
};

// Exact parameter counts of the encoder and of the reassembly projections.
std::int64_t vit_parameter_count(const BackboneConfig& cfg);
std::int64_t reassembly_parameter_count(const BackboneConfig& cfg);

class ViTBlockImpl : public torch::nn::Module {
 public:
  ViTBlockImpl(int dim, int heads);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  int heads_;
  torch::nn::LayerNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Linear qkv_{nullptr}, proj_{nullptr}, fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(ViTBlock);

// Plain ViT (patch embedding, class token, learned positions, pre-norm blocks) whose tapped
// block outputs are reassembled into a four-level feature pyramid. Parameters never require
// gradients; forward runs without autograd recording.
class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(BackboneConfig cfg);

  // images: N x 3 x H x W in [0,1], H and W divisible by 32.
  FeaturePyramid forward(const torch::Tensor& images);

  // Token sequences (N x L x D, class token removed) of the tapped blocks.
  std::array<torch::Tensor, kPyramidLevels> tapped_tokens(const torch::Tensor& images);

  // tokens: N x (grid_h*grid_w) x D. Returns N x C_level x (grid_h*p/s) x (grid_w*p/s).
  torch::Tensor reassemble(const torch::Tensor& tokens, int level, std::int64_t grid_h,
                           std::int64_t grid_w);

  void load_weights(const std::filesystem::path& path);
  void save_weights(const std::filesystem::path& path) const;

  const BackboneConfig& config() const { return cfg_; }
  std::int64_t encoder_parameter_count() const;
  std::int64_t reassembly_parameter_count() const;

 private:
  torch::Tensor position_embedding(std::int64_t grid_h, std::int64_t grid_w) const;

  BackboneConfig cfg_;
  torch::nn::Conv2d patch_embed_{nullptr};
  torch::Tensor cls_token_, pos_embed_;
  torch::nn::ModuleList blocks_;
  torch::nn::LayerNorm norm_{nullptr};
  // Per level: 1x1 projection then a resampling conv (identity when the token stride matches).
  std::array<torch::nn::Sequential, kPyramidLevels> reassemble_;
};
TORCH_MODULE(Backbone);

// Validates tile geometry/range and runs the frozen encoder.
FeaturePyramid extract_features(Backbone& backbone, const torch::Tensor& images);

}  // namespace depthseg
