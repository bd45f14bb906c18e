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

#include "depthseg/model.hpp"

#include "depthseg/params.hpp"

namespace depthseg {

DepthSegModelImpl::DepthSegModelImpl(const BackboneConfig& cfg, ModelToggles toggles, int num_classes)
    : toggles_(toggles) {
  const auto& channels = cfg.reassembly_channels;
  backbone_ = register_module("backbone", Backbone(cfg));
  adapter_ = register_module("adapter", Adapter(channels));
  depth_ = register_module("depth_decoder", DepthDecoder(channels));
  prompter_ = register_module("prompter", Prompter(prompt_channels(cfg)));
  seg_ = register_module("seg_decoder", SegDecoder(channels, num_classes));
}

ModelOutput DepthSegModelImpl::forward(const torch::Tensor& images) {
  ModelOutput out;
  backbone_->eval();
  out.encoder = extract_features(backbone_, images);
  out.features = toggles_.adapter_enabled ? adapter_->forward(out.encoder) : out.encoder;
  if (toggles_.prompter_enabled) {
    out.depth = decode_depth(depth_, out.features);
    out.prompts = encode_prompts(prompter_, *out.depth);
  }
  out.logits = decode_semantics(seg_, out.features, out.prompts);
  return out;
}

std::vector<torch::Tensor> DepthSegModelImpl::trainable_parameters() const {
  std::vector<torch::Tensor> params;
  for (const auto* m : std::initializer_list<const torch::nn::Module*>{
           adapter_.get(), depth_.get(), prompter_.get(), seg_.get()}) {
    for (const auto& p : m->parameters()) params.push_back(p);
  }
  return params;
}

std::map<std::string, ParameterEntry> parameter_report(DepthSegModel& model) {
  auto trainable = [](const torch::nn::Module& m) {
    for (const auto& p : m.parameters())
      if (!p.requires_grad()) return false;
    return true;
  };
  std::map<std::string, ParameterEntry> r;
  auto& bb = model->backbone();
  bool bb_trainable = false;
  for (const auto& p : bb->parameters()) bb_trainable = bb_trainable || p.requires_grad();
  r["backbone.encoder"] = {bb->encoder_parameter_count(), bb_trainable};
  r["backbone.reassemble"] = {bb->reassembly_parameter_count(), bb_trainable};
  r["adapter"] = {count_parameters(*model->adapter()), trainable(*model->adapter())};
  r["depth_decoder"] = {count_parameters(*model->depth_decoder()), trainable(*model->depth_decoder())};
  r["prompter"] = {count_parameters(*model->prompter()), trainable(*model->prompter())};
  r["seg_decoder"] = {count_parameters(*model->seg_decoder()), trainable(*model->seg_decoder())};
  return r;
}

std::uint64_t backbone_checksum(DepthSegModel& model) { return parameter_checksum(*model->backbone()); }

}  // namespace depthseg
