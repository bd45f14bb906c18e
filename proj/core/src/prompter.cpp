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

#include "depthseg/prompter.hpp"

#include <string>

#include "depthseg/errors.hpp"
#include "detail/init.hpp"

namespace depthseg {

namespace F = torch::nn::functional;

std::array<int, kPyramidLevels> prompt_channels(const BackboneConfig& cfg) {
  return cfg.reassembly_channels;
}

PromptBlockImpl::PromptBlockImpl(int channels)
    : transform_(detail::conv(channels, channels, 3), detail::batch_norm(channels),
                 torch::nn::ReLU(), detail::conv(channels, channels, 3)) {
  register_module("transform", transform_);
}

torch::Tensor PromptBlockImpl::forward(const torch::Tensor& z) { return z + transform_->forward(z); }

void PromptBlockImpl::zero_transform() {
  torch::NoGradGuard no_grad;
  for (auto& p : transform_->parameters()) p.zero_();
}

PrompterImpl::PrompterImpl(const std::array<int, kPyramidLevels>& channels) : channels_(channels) {
  const int c0 = channels[0];
  shallow_ = register_module(
      "shallow", torch::nn::Sequential(detail::conv(kDepthScales, c0, 3, /*stride=*/2),
                                       detail::batch_norm(c0), torch::nn::ReLU()));
  for (int i = 0; i < kPyramidLevels; ++i) {
    blocks_[i] = register_module("block" + std::to_string(i), PromptBlock(channels[i]));
    if (i > 0) {
      transmit_[i] = register_module("transmit" + std::to_string(i),
                                     detail::conv(channels[i - 1], channels[i], 1));
      skip_[i] = register_module("skip" + std::to_string(i), detail::conv(c0, channels[i], 1));
    }
  }
  detail::init_convs(*this);
}

PromptPyramid PrompterImpl::forward(const DepthPyramid& depth) {
  const auto h = depth.maps[0].size(2), w = depth.maps[0].size(3);
  check_depth_pyramid(depth, h, w);

  auto fine = F::avg_pool2d(depth.maps[0], F::AvgPool2dFuncOptions(2).stride(2));
  auto coarse = F::interpolate(depth.maps[2], F::InterpolateFuncOptions()
                                                  .scale_factor(std::vector<double>{2.0, 2.0})
                                                  .mode(torch::kNearest));
  auto stacked = torch::cat({fine, depth.maps[1], coarse}, 1);
  auto shallow = shallow_->forward(stacked);  // stride 4

  PromptPyramid out;
  torch::Tensor prev;
  for (int i = 0; i < kPyramidLevels; ++i) {
    torch::Tensor z;
    if (i == 0) {
      z = shallow;
    } else {
      const auto k = std::int64_t{1} << i;
      auto down = F::avg_pool2d(prev, F::AvgPool2dFuncOptions(2).stride(2));
      auto skip = F::avg_pool2d(shallow, F::AvgPool2dFuncOptions(k).stride(k));
      z = transmit_[i](down) + skip_[i](skip);
    }
    prev = blocks_[i](z);
    out.prompts[i] = prev;
  }
  return out;
}

PromptPyramid encode_prompts(Prompter& prompter, const DepthPyramid& depth) {
  auto out = prompter->forward(depth);
  const auto h = depth.maps[0].size(2), w = depth.maps[0].size(3);
  check_feature_levels(out.prompts, h, w);
  return out;
}

}  // namespace depthseg
