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

#include "depthseg/adapter.hpp"

#include <string>

#include "depthseg/errors.hpp"
#include "detail/init.hpp"

namespace depthseg {

std::array<AdapterBlockSpec, kPyramidLevels> adapter_block_specs(const BackboneConfig& cfg) {
  std::array<AdapterBlockSpec, kPyramidLevels> specs;
  for (int i = 0; i < kPyramidLevels; ++i)
    specs[i] = {cfg.reassembly_channels[i], cfg.reassembly_channels[i]};
  return specs;
}

std::int64_t adapter_param_count(const BackboneConfig& cfg) {
  std::int64_t total = 0;
  for (const auto& spec : adapter_block_specs(cfg)) {
    const std::int64_t c = spec.in_channels;
    total += c * c + c + 2 * c;
  }
  return total;
}

AdapterImpl::AdapterImpl(const std::array<int, kPyramidLevels>& channels) : channels_(channels) {
  for (int i = 0; i < kPyramidLevels; ++i) {
    const int c = channels[i];
    blocks_[i] = register_module("block" + std::to_string(i),
                                 torch::nn::Sequential(detail::conv(c, c, 1), detail::batch_norm(c),
                                                       torch::nn::ReLU()));
    detail::init_convs(*blocks_[i]);
  }
}

FeaturePyramid AdapterImpl::forward(const FeaturePyramid& encoder_features) {
  FeaturePyramid out;
  out.source = PyramidSource::kAdapter;
  for (int i = 0; i < kPyramidLevels; ++i) {
    const auto& level = encoder_features.levels[i];
    if (!level.defined() || level.dim() != 4 || level.size(1) != channels_[i]) {
      throw ContractError("adapter: level " + std::to_string(i) + " expects " +
                          std::to_string(channels_[i]) + " channels");
    }
    out.levels[i] = blocks_[i]->forward(level);
  }
  return out;
}

}  // namespace depthseg
