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

#include "depthseg/backbone.hpp"
#include "depthseg/pyramids.hpp"

namespace depthseg {

struct AdapterBlockSpec {
  int in_channels = 0;
  int out_channels = 0;
};

std::array<AdapterBlockSpec, kPyramidLevels> adapter_block_specs(const BackboneConfig& cfg);

// Closed form: sum over levels of C*C + C (1x1 conv) plus 2*C (batch-norm scale and shift).
std::int64_t adapter_param_count(const BackboneConfig& cfg);

// One 1x1 conv -> batch norm -> ReLU block per pyramid level; shapes are preserved.
class AdapterImpl : public torch::nn::Module {
 public:
  explicit AdapterImpl(const std::array<int, kPyramidLevels>& channels);

  FeaturePyramid forward(const FeaturePyramid& encoder_features);

 private:
  std::array<int, kPyramidLevels> channels_;
  std::array<torch::nn::Sequential, kPyramidLevels> blocks_;
};
TORCH_MODULE(Adapter);

}  // namespace depthseg
