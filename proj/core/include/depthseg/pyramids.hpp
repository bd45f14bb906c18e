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

#include <torch/torch.h>

namespace depthseg {

// All maps are batched NCHW float tensors.

inline constexpr int kPyramidLevels = 4;
inline constexpr int kDepthScales = 3;

// Stride of feature/prompt level i relative to the input tile.
constexpr std::int64_t level_stride(int level) { return std::int64_t{1} << (level + 2); }
// Stride of depth scale s (0 = finest).
constexpr std::int64_t depth_stride(int scale) { return std::int64_t{1} << scale; }

enum class PyramidSource { kEncoder, kAdapter };

struct FeaturePyramid {
  std::array<torch::Tensor, kPyramidLevels> levels;
  PyramidSource source = PyramidSource::kEncoder;
};

// maps[0] is the full-resolution map (stride 1), then strides 2 and 4.
struct DepthPyramid {
  std::array<torch::Tensor, kDepthScales> maps;
};

struct PromptPyramid {
  std::array<torch::Tensor, kPyramidLevels> prompts;
};

// Throws ContractError unless every level is 4-D with the given batch, the stride
// contract for a (height x width) tile, and (when given) the expected channel counts.
void check_feature_levels(const std::array<torch::Tensor, kPyramidLevels>& levels,
                          std::int64_t height, std::int64_t width,
                          const std::array<int, kPyramidLevels>* channels = nullptr);

void check_depth_pyramid(const DepthPyramid& depth, std::int64_t height, std::int64_t width);

// Tile geometry implied by a pyramid's finest level.
inline std::pair<std::int64_t, std::int64_t> tile_size_of(const FeaturePyramid& f) {
  return {f.levels[0].size(2) * level_stride(0), f.levels[0].size(3) * level_stride(0)};
}

}  // namespace depthseg
