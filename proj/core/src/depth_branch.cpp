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

#include "depthseg/depth_branch.hpp"

#include <cmath>

#include "depthseg/errors.hpp"
#include "depthseg/image_io.hpp"
#include "detail/init.hpp"

namespace depthseg {

namespace F = torch::nn::functional;

torch::Tensor normalize_depth(const torch::Tensor& raw) {
  if (raw.dim() < 2) throw InputError("normalize_depth: expected at least a 2-D map");
  if (!torch::isfinite(raw).all().item<bool>()) throw InputError("normalize_depth: non-finite depth");
  auto flat = raw.flatten(-2);
  auto lo = std::get<0>(flat.min(-1, /*keepdim=*/true)).unsqueeze(-1);
  auto hi = std::get<0>(flat.max(-1, /*keepdim=*/true)).unsqueeze(-1);
  auto range = hi - lo;
  auto degenerate = range <= 0;
  auto out = (raw - lo) / torch::where(degenerate, torch::ones_like(range), range);
  return torch::where(degenerate, torch::zeros_like(out), out);
}

torch::Tensor area_downsample(const torch::Tensor& map, std::int64_t factor) {
  if (factor == 1) return map;
  auto x = map;
  const auto dims = x.dim();
  while (x.dim() < 4) x = x.unsqueeze(0);
  auto y = F::avg_pool2d(x, F::AvgPool2dFuncOptions(factor).stride(factor));
  while (y.dim() > dims) y = y.squeeze(0);
  return y;
}

void OraclePseudoLabelProvider::add(const std::string& tile_id, torch::Tensor height) {
  heights_[tile_id] = std::move(height);
}

bool OraclePseudoLabelProvider::contains(const std::string& tile_id) const {
  return heights_.contains(tile_id);
}

PseudoLabel OraclePseudoLabelProvider::lookup(const std::string& tile_id) const {
  auto it = heights_.find(tile_id);
  if (it == heights_.end()) throw MissingLabelError("no pseudo-label for tile '" + tile_id + "'");
  return {tile_id, it->second, PseudoLabelProvenance::kSyntheticOracle};
}

FilePseudoLabelProvider::FilePseudoLabelProvider(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path FilePseudoLabelProvider::path_for(const std::filesystem::path& root,
                                                        const std::string& tile_id) {
  return root / "depth" / (tile_id + "_depth.png");
}

bool FilePseudoLabelProvider::contains(const std::string& tile_id) const {
  return std::filesystem::is_regular_file(path_for(root_, tile_id));
}

PseudoLabel FilePseudoLabelProvider::lookup(const std::string& tile_id) const {
  const auto path = path_for(root_, tile_id);
  if (!std::filesystem::is_regular_file(path))
    throw MissingLabelError("no pseudo-label file for tile '" + tile_id + "' (" + path.string() + ")");
  return {tile_id, read_depth_png(path), PseudoLabelProvenance::kTeacherFile};
}

DepthTargets make_depth_targets(const torch::Tensor& depth) {
  if (depth.dim() != 2) throw InputError("pseudo-label must be an H x W map");
  auto full = normalize_depth(depth.to(torch::kFloat32)).unsqueeze(0).unsqueeze(0);
  DepthTargets t;
  for (int s = 0; s < kDepthScales; ++s) t.maps[s] = area_downsample(full, depth_stride(s));
  return t;
}

DepthTargets fetch_pseudo_label(const PseudoLabelProvider& provider, const std::string& tile_id) {
  return make_depth_targets(provider.lookup(tile_id).depth);
}

ConvUnitImpl::ConvUnitImpl(int in, int out)
    : conv_(detail::conv(in, out, 3, 1, /*bias=*/false)), bn_(detail::batch_norm(out)) {
  register_module("conv", conv_);
  register_module("bn", bn_);
}

torch::Tensor ConvUnitImpl::forward(const torch::Tensor& x) { return torch::relu(bn_(conv_(x))); }

FusionBlockImpl::FusionBlockImpl(int channels) : refine_(channels, channels) {
  register_module("refine", refine_);
}

torch::Tensor FusionBlockImpl::forward(const torch::Tensor& path, const torch::Tensor& skip) {
  auto x = skip;
  if (path.defined()) x = x + detail::upsample(path, 2.0);
  return refine_(x);
}

DepthHeadImpl::DepthHeadImpl(int features, int hidden)
    : up1_(features, hidden), up2_(hidden, hidden), out_(detail::conv(hidden, 1, 1)) {
  register_module("up1", up1_);
  register_module("up2", up2_);
  register_module("out", out_);
}

torch::Tensor DepthHeadImpl::forward(const torch::Tensor& stage) {
  auto x = up1_(detail::upsample(stage, 2.0));
  x = up2_(detail::upsample(x, 2.0));
  return torch::sigmoid(out_(x));
}

void DepthHeadImpl::set_output_prior(double mean) {
  if (!(mean > 0.0 && mean < 1.0)) throw InputError("depth prior must lie in (0,1)");
  torch::NoGradGuard no_grad;
  out_->bias.fill_(std::log(mean / (1.0 - mean)));
}

DepthDecoderImpl::DepthDecoderImpl(const std::array<int, kPyramidLevels>& channels, int features)
    : channels_(channels) {
  for (int i = 0; i < kPyramidLevels; ++i) {
    project_[i] = register_module("project" + std::to_string(i), detail::conv(channels[i], features, 1));
    fusion_[i] = register_module("fusion" + std::to_string(i), FusionBlock(features));
  }
  for (int s = 0; s < kDepthScales; ++s)
    heads_[s] = register_module("head" + std::to_string(s), DepthHead(features));
  detail::init_convs(*this);
}

DepthPyramid DepthDecoderImpl::forward(const FeaturePyramid& features) {
  const auto [h, w] = tile_size_of(features);
  check_feature_levels(features.levels, h, w, &channels_);

  // stage[i] sits at the stride of pyramid level i.
  std::array<torch::Tensor, kPyramidLevels> stage;
  torch::Tensor path;
  for (int i = kPyramidLevels - 1; i >= 0; --i) {
    path = fusion_[i](path, project_[i](features.levels[i]));
    stage[i] = path;
  }
  DepthPyramid out;
  // Map s (stride 2^s) comes from stage s (stride 2^(s+2)).
  for (int s = 0; s < kDepthScales; ++s) out.maps[s] = heads_[s](stage[s]);
  return out;
}

void DepthDecoderImpl::set_output_prior(double mean) {
  for (auto& head : heads_) head->set_output_prior(mean);
}

DepthPyramid decode_depth(DepthDecoder& decoder, const FeaturePyramid& features) {
  auto out = decoder->forward(features);
  const auto [h, w] = tile_size_of(features);
  check_depth_pyramid(out, h, w);
  return out;
}

}  // namespace depthseg
