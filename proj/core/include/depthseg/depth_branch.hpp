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
#include <filesystem>
#include <map>
#include <string>

#include <torch/torch.h>

#include "depthseg/pyramids.hpp"

namespace depthseg {

// Per-map min-max normalization into [0,1] over the last two dimensions. Constant maps
// become all zeros. Throws InputError on NaN/Inf.
torch::Tensor normalize_depth(const torch::Tensor& raw);

// Area-average downsampling by an integer factor (mean preserving).
torch::Tensor area_downsample(const torch::Tensor& map, std::int64_t factor);

enum class PseudoLabelProvenance { kTeacherFile, kSyntheticOracle };

struct PseudoLabel {
  std::string tile_id;
  torch::Tensor depth;  // H x W, float32
  PseudoLabelProvenance provenance = PseudoLabelProvenance::kTeacherFile;
};

// Seam for an external depth teacher. Implementations must be read-only after
// construction so lookups can run from several loader threads.
class PseudoLabelProvider {
 public:
  virtual ~PseudoLabelProvider() = default;
  virtual bool contains(const std::string& tile_id) const = 0;
  // Throws MissingLabelError for unknown ids.
  virtual PseudoLabel lookup(const std::string& tile_id) const = 0;
};

// Holds ground-truth surface elevation fields straight from the scene generator.
class OraclePseudoLabelProvider final : public PseudoLabelProvider {
 public:
  void add(const std::string& tile_id, torch::Tensor height);
  bool contains(const std::string& tile_id) const override;
  PseudoLabel lookup(const std::string& tile_id) const override;

 private:
  std::map<std::string, torch::Tensor> heights_;
};

// Reads `<root>/depth/<tile_id>_depth.png` (16-bit, 0 -> 0.0, 65535 -> 1.0).
class FilePseudoLabelProvider final : public PseudoLabelProvider {
 public:
  explicit FilePseudoLabelProvider(std::filesystem::path root);
  bool contains(const std::string& tile_id) const override;
  PseudoLabel lookup(const std::string& tile_id) const override;

  static std::filesystem::path path_for(const std::filesystem::path& root,
                                        const std::string& tile_id);

 private:
  std::filesystem::path root_;
};

// Pseudo-label targets at the three depth strides, each 1 x 1 x H/s x W/s.
struct DepthTargets {
  std::array<torch::Tensor, kDepthScales> maps;
};

// Normalizes the label and area-averages it to strides 1, 2 and 4.
DepthTargets fetch_pseudo_label(const PseudoLabelProvider& provider, const std::string& tile_id);
DepthTargets make_depth_targets(const torch::Tensor& depth);

// 3x3 conv, batch norm, ReLU.
class ConvUnitImpl : public torch::nn::Module {
 public:
  ConvUnitImpl(int in, int out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::BatchNorm2d bn_{nullptr};
};
TORCH_MODULE(ConvUnit);

class FusionBlockImpl : public torch::nn::Module {
 public:
  explicit FusionBlockImpl(int channels);
  // Adds the 2x-upsampled coarser `path` (undefined for the coarsest stage) to `skip`
  // and refines the sum. The output keeps the stride of `skip`.
  torch::Tensor forward(const torch::Tensor& path, const torch::Tensor& skip);

 private:
  ConvUnit refine_{nullptr};
};
TORCH_MODULE(FusionBlock);

// Two rounds of (2x bilinear upsample, conv unit), then a 1x1 projection and a sigmoid.
class DepthHeadImpl : public torch::nn::Module {
 public:
  explicit DepthHeadImpl(int features, int hidden = 32);
  torch::Tensor forward(const torch::Tensor& stage);
  // Sets the output bias so a zero hidden response maps to `mean`, in (0,1).
  void set_output_prior(double mean);

 private:
  ConvUnit up1_{nullptr}, up2_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(DepthHead);

// Coarse-to-fine fusion decoder over the feature pyramid. The last three fusion stages
// (strides 16, 8, 4) each drive a head that upsamples 4x, giving depth maps at
// strides 4, 2 and 1 with values in [0,1].
class DepthDecoderImpl : public torch::nn::Module {
 public:
  DepthDecoderImpl(const std::array<int, kPyramidLevels>& channels, int features = 256);
  DepthPyramid forward(const FeaturePyramid& features);
  // Starts every head near the mean of the normalized pseudo-labels.
  void set_output_prior(double mean);

 private:
  std::array<int, kPyramidLevels> channels_;
  std::array<torch::nn::Conv2d, kPyramidLevels> project_{nullptr, nullptr, nullptr, nullptr};
  std::array<FusionBlock, kPyramidLevels> fusion_{nullptr, nullptr, nullptr, nullptr};
  // heads_[s] emits the depth map at stride 2^s.
  std::array<DepthHead, kDepthScales> heads_{nullptr, nullptr, nullptr};
};
TORCH_MODULE(DepthDecoder);

DepthPyramid decode_depth(DepthDecoder& decoder, const FeaturePyramid& features);

}  // namespace depthseg
