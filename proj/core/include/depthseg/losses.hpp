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

#include <optional>

#include <torch/torch.h>

#include "depthseg/depth_branch.hpp"
#include "depthseg/pyramids.hpp"

namespace depthseg {

struct SsimParams {
  int window = 11;  // odd, Gaussian
  double sigma = 1.5;
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  void validate() const;
};

// Mean SSIM over all valid Gaussian windows (and over the batch). Inputs are [..., H, W]
// with identical shapes. A map smaller than the window is scored with one global window.
// Differentiable; works in the inputs' dtype.
torch::Tensor ssim(const torch::Tensor& x, const torch::Tensor& y, const SsimParams& p = {});

// Mean over the three depth scales of 1 - SSIM(pred_s, target_s). Targets are batched
// (N x 1 x h x w per scale) to match `pred`.
torch::Tensor depth_loss(const DepthPyramid& pred, const DepthTargets& targets,
                         const SsimParams& p = {});

// Multiclass cross-entropy averaged over pixels whose label is not kIgnoreLabel.
// labels: N x H x W integer tensor. Throws UndefinedLossError if every pixel is ignored.
torch::Tensor class_loss(const torch::Tensor& logits, const torch::Tensor& labels);

struct LossReport {
  std::optional<double> depth_loss;  // absent when the depth branch is detached
  double class_loss = 0.0;
  double total = 0.0;
};

// Unweighted sum; `total` is computed from the two reported values so the identity is exact.
LossReport total_loss(std::optional<double> depth, double cls);

}  // namespace depthseg
