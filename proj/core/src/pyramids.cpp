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

#include "depthseg/pyramids.hpp"

#include <string>

#include "depthseg/errors.hpp"

namespace depthseg {

void check_feature_levels(const std::array<torch::Tensor, kPyramidLevels>& levels,
                          std::int64_t height, std::int64_t width,
                          const std::array<int, kPyramidLevels>* channels) {
  for (int i = 0; i < kPyramidLevels; ++i) {
    const auto& t = levels[i];
    if (!t.defined() || t.dim() != 4)
      throw ContractError("pyramid level " + std::to_string(i) + " is not a 4-D tensor");
    const auto s = level_stride(i);
    if (t.size(2) != height / s || t.size(3) != width / s) {
      throw ContractError("pyramid level " + std::to_string(i) + " has spatial size " +
                          std::to_string(t.size(2)) + "x" + std::to_string(t.size(3)) +
                          ", expected " + std::to_string(height / s) + "x" +
                          std::to_string(width / s));
    }
    if (t.size(0) != levels[0].size(0)) throw ContractError("pyramid levels disagree on batch size");
    if (channels != nullptr && t.size(1) != (*channels)[i]) {
      throw ContractError("pyramid level " + std::to_string(i) + " has " +
                          std::to_string(t.size(1)) + " channels, expected " +
                          std::to_string((*channels)[i]));
    }
  }
}

void check_depth_pyramid(const DepthPyramid& depth, std::int64_t height, std::int64_t width) {
  for (int s = 0; s < kDepthScales; ++s) {
    const auto& t = depth.maps[s];
    if (!t.defined() || t.dim() != 4 || t.size(1) != 1)
      throw ContractError("depth scale " + std::to_string(s) + " must be an N x 1 x H x W tensor");
    const auto st = depth_stride(s);
    if (t.size(2) != height / st || t.size(3) != width / st)
      throw ContractError("depth scale " + std::to_string(s) + " violates the stride contract");
    if (t.size(0) != depth.maps[0].size(0)) throw ContractError("depth scales disagree on batch size");
  }
}

}  // namespace depthseg
