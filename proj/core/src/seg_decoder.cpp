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

#include "depthseg/seg_decoder.hpp"

#include <string>

#include "depthseg/errors.hpp"
#include "detail/init.hpp"

namespace depthseg {

PromptFusionImpl::PromptFusionImpl(int channels)
    : feature_(detail::conv(channels, channels, 1)),
      prompt_(detail::conv(channels, channels, 1, 1, /*bias=*/false)) {
  register_module("feature", feature_);
  register_module("prompt", prompt_);
}

torch::Tensor PromptFusionImpl::forward(const torch::Tensor& f, const std::optional<torch::Tensor>& psi) {
  auto out = feature_(f);
  if (psi) out = out + prompt_(*psi);
  return out;
}

SegDecoderImpl::SegDecoderImpl(const std::array<int, kPyramidLevels>& channels, int num_classes,
                               int width)
    : channels_(channels), num_classes_(num_classes), width_(width) {
  for (int i = 0; i < kPyramidLevels; ++i) {
    const int c = channels[i];
    fusion_[i] = register_module("fusion" + std::to_string(i), PromptFusion(c));
    lift_[i] = register_module("lift" + std::to_string(i), detail::conv(c, width, 1));
    layers_[i] = register_module(
        "layer" + std::to_string(i),
        torch::nn::Sequential(detail::conv(width, width, 3), detail::batch_norm(width), torch::nn::ReLU()));
  }
  classifier_ = register_module("classifier", detail::conv(width, num_classes, 1));
  detail::init_convs(*this);
  // Prompt columns start at zero: a fresh decoder scores exactly like the prompt-free path.
  torch::NoGradGuard no_grad;
  for (auto& f : fusion_) f->prompt_columns()->weight.zero_();
}

torch::Tensor SegDecoderImpl::forward(const FeaturePyramid& f, const std::optional<PromptPyramid>& psi) {
  const auto [h, w] = tile_size_of(f);
  check_feature_levels(f.levels, h, w, &channels_);
  if (psi) {
    check_feature_levels(psi->prompts, h, w, &channels_);
    if (psi->prompts[0].size(0) != f.levels[0].size(0))
      throw ContractError("prompt and feature pyramids disagree on batch size");
  }
  auto fused = [&](int i) {
    return lift_[i](psi ? fusion_[i](f.levels[i], psi->prompts[i]) : fusion_[i](f.levels[i], std::nullopt));
  };

  auto x = layers_[3]->forward(fused(3));
  for (int i = kPyramidLevels - 2; i >= 0; --i) x = layers_[i]->forward(detail::upsample(x, 2.0) + fused(i));
  // Classifying before the 4x upsample gives the same scores as classifying after it.
  return detail::upsample(classifier_(x), 4.0);
}

torch::Tensor decode_semantics(SegDecoder& decoder, const FeaturePyramid& f,
                               const std::optional<PromptPyramid>& psi) {
  return decoder->forward(f, psi);
}

torch::Tensor predict_mask(const torch::Tensor& logits) {
  if (logits.dim() != 4) throw InputError("predict_mask: expected N x K x H x W logits");
  // argmax returns the first maximal index on CPU.
  return logits.argmax(1).to(torch::kUInt8);
}

std::vector<LabelMask> to_label_masks(const torch::Tensor& masks) {
  auto m = masks.to(torch::kUInt8).contiguous();
  std::vector<LabelMask> out;
  const auto n = m.size(0), h = m.size(1), w = m.size(2);
  const auto* data = m.data_ptr<std::uint8_t>();
  for (std::int64_t i = 0; i < n; ++i) {
    LabelMask mask(h, w);
    std::copy(data + i * h * w, data + (i + 1) * h * w, mask.classes.begin());
    out.push_back(std::move(mask));
  }
  return out;
}

}  // namespace depthseg
