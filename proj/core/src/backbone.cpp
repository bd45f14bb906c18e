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

#include "depthseg/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "depthseg/errors.hpp"
#include "depthseg/params.hpp"
#include "depthseg/tensor_archive.hpp"
#include "detail/init.hpp"

namespace depthseg {

namespace F = torch::nn::functional;

namespace {

// Normal(0, std) redrawn until every value lies within two standard deviations.
void trunc_normal(torch::Tensor t, double std) {
  t.normal_(0.0, std);
  for (auto out = t.abs() > 2.0 * std; out.any().item<bool>(); out = t.abs() > 2.0 * std)
    t.masked_scatter_(out, torch::randn_like(t).mul_(std).masked_select(out));
}

}  // namespace

std::string_view to_string(BackboneName name) {
  switch (name) {
    case BackboneName::kTiny:
      return "tiny";
    case BackboneName::kVitS:
      return "vit_s";
    case BackboneName::kVitB:
      return "vit_b";
    case BackboneName::kVitL:
      return "vit_l";
  }
  return "?";
}

BackboneName backbone_name_from_string(std::string_view s) {
  if (s == "tiny") return BackboneName::kTiny;
  if (s == "vit_s") return BackboneName::kVitS;
  if (s == "vit_b") return BackboneName::kVitB;
  if (s == "vit_l") return BackboneName::kVitL;
  throw ConfigError("unknown backbone '" + std::string(s) + "'");
}

BackboneConfig BackboneConfig::preset(BackboneName name) {
  BackboneConfig c;
  c.name = name;
  switch (name) {
    case BackboneName::kTiny:
      break;
    case BackboneName::kVitS:
      c.patch_size = 16;
      c.embed_dim = 384;
      c.depth = 12;
      c.num_heads = 6;
      c.tap_indices = {2, 5, 8, 11};
      c.reassembly_channels = {48, 96, 192, 384};
      c.reference_size = 512;
      break;
    case BackboneName::kVitB:
      c.patch_size = 16;
      c.embed_dim = 768;
      c.depth = 12;
      c.num_heads = 12;
      c.tap_indices = {2, 5, 8, 11};
      c.reassembly_channels = {96, 192, 384, 768};
      c.reference_size = 512;
      break;
    case BackboneName::kVitL:
      c.patch_size = 16;
      c.embed_dim = 1024;
      c.depth = 24;
      c.num_heads = 16;
      c.tap_indices = {5, 11, 17, 23};
      c.reassembly_channels = {96, 192, 384, 768};
      c.reference_size = 512;
      break;
  }
  return c;
}

void BackboneConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("backbone config: " + m); };
  if (patch_size <= 0 || 32 % patch_size != 0) fail("patch_size must divide 32");
  if (embed_dim <= 0 || num_heads <= 0 || embed_dim % num_heads != 0)
    fail("embed_dim must be a positive multiple of num_heads");
  if (depth <= 0) fail("depth must be positive");
  for (int i = 0; i < kPyramidLevels; ++i) {
    if (tap_indices[i] < 0 || tap_indices[i] >= depth) fail("tap index out of range");
    if (i > 0 && tap_indices[i] <= tap_indices[i - 1]) fail("tap indices must be strictly increasing");
    if (reassembly_channels[i] <= 0) fail("reassembly channels must be positive");
  }
  if (reference_size <= 0 || reference_size % 32 != 0) fail("reference_size must be a multiple of 32");
}

std::int64_t vit_parameter_count(const BackboneConfig& cfg) {
  const std::int64_t d = cfg.embed_dim;
  const std::int64_t p = cfg.patch_size;
  const std::int64_t grid = cfg.reference_size / cfg.patch_size;
  const std::int64_t patch = 3 * p * p * d + d;
  const std::int64_t tokens = d + (grid * grid + 1) * d;
  const std::int64_t block = 12 * d * d + 13 * d;
  return patch + tokens + cfg.depth * block + 2 * d;
}

std::int64_t reassembly_parameter_count(const BackboneConfig& cfg) {
  std::int64_t total = 0;
  for (int i = 0; i < kPyramidLevels; ++i) {
    const std::int64_t c = cfg.reassembly_channels[i];
    total += cfg.embed_dim * c + c;
    const auto s = level_stride(i);
    if (s != cfg.patch_size) {
      const std::int64_t k = std::max<std::int64_t>(s, cfg.patch_size) /
                             std::min<std::int64_t>(s, cfg.patch_size);
      total += c * c * k * k + c;
    }
  }
  return total;
}

ViTBlockImpl::ViTBlockImpl(int dim, int heads)
    : heads_(heads),
      norm1_(torch::nn::LayerNormOptions({dim}).eps(1e-6)),
      norm2_(torch::nn::LayerNormOptions({dim}).eps(1e-6)),
      qkv_(dim, 3 * dim),
      proj_(dim, dim),
      fc1_(dim, 4 * dim),
      fc2_(4 * dim, dim) {
  register_module("norm1", norm1_);
  register_module("qkv", qkv_);
  register_module("proj", proj_);
  register_module("norm2", norm2_);
  register_module("fc1", fc1_);
  register_module("fc2", fc2_);
  torch::NoGradGuard no_grad;
  for (auto* lin : {&qkv_, &proj_, &fc1_, &fc2_}) {
    trunc_normal((*lin)->weight, 0.02);
    (*lin)->bias.zero_();
  }
}

torch::Tensor ViTBlockImpl::forward(const torch::Tensor& x) {
  const auto n = x.size(0), l = x.size(1), d = x.size(2);
  auto qkv = qkv_(norm1_(x)).reshape({n, l, 3, heads_, d / heads_}).permute({2, 0, 3, 1, 4});
  auto attn = at::scaled_dot_product_attention(qkv[0], qkv[1], qkv[2]);
  auto y = x + proj_(attn.transpose(1, 2).reshape({n, l, d}));
  return y + fc2_(F::gelu(fc1_(norm2_(y))));
}

BackboneImpl::BackboneImpl(BackboneConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int d = cfg_.embed_dim;
  const int grid = cfg_.reference_size / cfg_.patch_size;
  patch_embed_ = register_module(
      "patch_embed",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(3, d, cfg_.patch_size).stride(cfg_.patch_size)));
  cls_token_ = register_parameter("cls_token", torch::zeros({1, 1, d}));
  pos_embed_ = register_parameter("pos_embed", torch::zeros({1, grid * grid + 1, d}));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int i = 0; i < cfg_.depth; ++i) blocks_->push_back(ViTBlock(d, cfg_.num_heads));
  norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d}).eps(1e-6)));

  for (int i = 0; i < kPyramidLevels; ++i) {
    const int c = cfg_.reassembly_channels[i];
    const auto s = level_stride(i);
    torch::nn::Sequential seq;
    seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(d, c, 1)));
    if (s < cfg_.patch_size) {
      const auto k = cfg_.patch_size / s;
      seq->push_back(torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(c, c, k).stride(k)));
    } else if (s > cfg_.patch_size) {
      const auto k = s / cfg_.patch_size;
      seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(c, c, k).stride(k)));
    }
    reassemble_[i] = register_module("reassemble" + std::to_string(i), seq);
  }

  {
    torch::NoGradGuard no_grad;
    trunc_normal(pos_embed_, 0.02);
    trunc_normal(cls_token_, 0.02);
    patch_embed_->bias.zero_();
    for (auto& seq : reassemble_) detail::init_convs(*seq);
  }

  if (cfg_.pretrained_weights) load_weights(*cfg_.pretrained_weights);
  for (auto& p : parameters()) p.set_requires_grad(false);
}

torch::Tensor BackboneImpl::position_embedding(std::int64_t grid_h, std::int64_t grid_w) const {
  const std::int64_t ref = cfg_.reference_size / cfg_.patch_size;
  if (grid_h == ref && grid_w == ref) return pos_embed_;
  const auto d = pos_embed_.size(2);
  auto cls = pos_embed_.narrow(1, 0, 1);
  auto grid = pos_embed_.narrow(1, 1, ref * ref).reshape({1, ref, ref, d}).permute({0, 3, 1, 2});
  grid = F::interpolate(grid, F::InterpolateFuncOptions()
                                  .size(std::vector<std::int64_t>{grid_h, grid_w})
                                  .mode(torch::kBicubic)
                                  .align_corners(false));
  grid = grid.permute({0, 2, 3, 1}).reshape({1, grid_h * grid_w, d});
  return torch::cat({cls, grid}, 1);
}

std::array<torch::Tensor, kPyramidLevels> BackboneImpl::tapped_tokens(const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  auto x = patch_embed_(images);
  const auto gh = x.size(2), gw = x.size(3);
  x = x.flatten(2).transpose(1, 2);
  x = torch::cat({cls_token_.expand({x.size(0), 1, x.size(2)}), x}, 1) + position_embedding(gh, gw);

  std::array<torch::Tensor, kPyramidLevels> taps;
  int next = 0;
  for (int i = 0; i < cfg_.depth && next < kPyramidLevels; ++i) {
    x = blocks_[i]->as<ViTBlock>()->forward(x);
    if (i == cfg_.tap_indices[next]) {
      taps[next++] = norm_(x).narrow(1, 1, gh * gw);  // class token stripped
    }
  }
  return taps;
}

torch::Tensor BackboneImpl::reassemble(const torch::Tensor& tokens, int level, std::int64_t grid_h,
                                       std::int64_t grid_w) {
  if (level < 0 || level >= kPyramidLevels) throw InputError("reassemble: level out of range");
  if (tokens.dim() != 3 || tokens.size(1) != grid_h * grid_w || tokens.size(2) != cfg_.embed_dim) {
    throw InputError("reassemble: expected N x " + std::to_string(grid_h * grid_w) + " x " +
                     std::to_string(cfg_.embed_dim) + " tokens, got " + c10::str(tokens.sizes()));
  }
  torch::NoGradGuard no_grad;
  auto grid = tokens.transpose(1, 2).reshape({tokens.size(0), cfg_.embed_dim, grid_h, grid_w});
  return reassemble_[level]->forward(grid);
}

FeaturePyramid BackboneImpl::forward(const torch::Tensor& images) {
  const auto gh = images.size(2) / cfg_.patch_size;
  const auto gw = images.size(3) / cfg_.patch_size;
  auto taps = tapped_tokens(images);
  FeaturePyramid out;
  out.source = PyramidSource::kEncoder;
  for (int i = 0; i < kPyramidLevels; ++i) out.levels[i] = reassemble(taps[i], i, gh, gw);
  return out;
}

void BackboneImpl::load_weights(const std::filesystem::path& path) {
  load_module_state(*this, TensorArchive::load(path));
}

void BackboneImpl::save_weights(const std::filesystem::path& path) const {
  TensorArchive archive;
  archive.header = "backbone=" + std::string(to_string(cfg_.name)) + "\n";
  store_module_state(*this, archive);
  archive.save(path);
}

std::int64_t BackboneImpl::encoder_parameter_count() const {
  return count_parameters(*this) - reassembly_parameter_count();
}

std::int64_t BackboneImpl::reassembly_parameter_count() const {
  std::int64_t n = 0;
  for (const auto& seq : reassemble_)
    for (const auto& p : seq->parameters()) n += p.numel();
  return n;
}

FeaturePyramid extract_features(Backbone& backbone, const torch::Tensor& images) {
  const auto& cfg = backbone->config();
  if (images.dim() != 4 || images.size(1) != 3)
    throw InputError("expected N x 3 x H x W images, got " + c10::str(images.sizes()));
  const auto h = images.size(2), w = images.size(3);
  if (h % 32 != 0 || w % 32 != 0)
    throw InputError("tile dimensions " + std::to_string(h) + "x" + std::to_string(w) +
                     " are not divisible by 32");
  if (h < cfg.patch_size || w < cfg.patch_size) throw InputError("tile smaller than one patch");
  if (!torch::isfinite(images).all().item<bool>() || images.min().item<double>() < 0.0 ||
      images.max().item<double>() > 1.0)
    throw InputError("tile values must be finite and within [0, 1]");
  auto out = backbone->forward(images);
  check_feature_levels(out.levels, h, w, &cfg.reassembly_channels);
  return out;
}

}  // namespace depthseg
