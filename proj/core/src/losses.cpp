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

#include "depthseg/losses.hpp"

#include <cmath>
#include <string>

#include "depthseg/errors.hpp"
#include "depthseg/label_mask.hpp"

namespace depthseg {

namespace F = torch::nn::functional;

void SsimParams::validate() const {
  if (window < 3 || window % 2 == 0) throw InputError("SSIM window must be odd and >= 3");
  if (sigma <= 0.0 || dynamic_range <= 0.0 || k1 <= 0.0 || k2 <= 0.0)
    throw InputError("SSIM constants must be positive");
}

namespace {

torch::Tensor gaussian_window(int size, double sigma, const torch::TensorOptions& opts) {
  auto coords = torch::arange(size, opts) - (size - 1) / 2.0;
  auto g = torch::exp(-(coords * coords) / (2.0 * sigma * sigma));
  return g / g.sum();
}

// Separable valid-mode Gaussian filter over B x 1 x H x W.
torch::Tensor blur(const torch::Tensor& x, const torch::Tensor& g) {
  const auto k = g.size(0);
  auto out = F::conv2d(x, g.view({1, 1, k, 1}));
  return F::conv2d(out, g.view({1, 1, 1, k}));
}

}  // namespace

torch::Tensor ssim(const torch::Tensor& x, const torch::Tensor& y, const SsimParams& p) {
  p.validate();
  if (x.sizes() != y.sizes())
    throw InputError("ssim: shape mismatch " + c10::str(x.sizes()) + " vs " + c10::str(y.sizes()));
  if (x.dim() < 2) throw InputError("ssim: expected at least a 2-D map");
  if (!torch::isfinite(x).all().item<bool>() || !torch::isfinite(y).all().item<bool>())
    throw InputError("ssim: non-finite input");

  const auto h = x.size(-2), w = x.size(-1);
  auto a = x.reshape({-1, 1, h, w});
  auto b = y.reshape({-1, 1, h, w}).to(a.scalar_type());
  const double c1 = p.c1(), c2 = p.c2();

  torch::Tensor mu_a, mu_b, var_a, var_b, cov;
  if (p.window > h || p.window > w) {
    mu_a = a.mean({2, 3}, true);
    mu_b = b.mean({2, 3}, true);
    var_a = ((a - mu_a) * (a - mu_a)).mean({2, 3}, true);
    var_b = ((b - mu_b) * (b - mu_b)).mean({2, 3}, true);
    cov = ((a - mu_a) * (b - mu_b)).mean({2, 3}, true);
  } else {
    auto g = gaussian_window(p.window, p.sigma, a.options());
    mu_a = blur(a, g);
    mu_b = blur(b, g);
    var_a = blur(a * a, g) - mu_a * mu_a;
    var_b = blur(b * b, g) - mu_b * mu_b;
    cov = blur(a * b, g) - mu_a * mu_b;
  }
  auto num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
  auto den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
  return (num / den).mean();
}

torch::Tensor depth_loss(const DepthPyramid& pred, const DepthTargets& targets, const SsimParams& p) {
  torch::Tensor total;
  for (int s = 0; s < kDepthScales; ++s) {
    auto term = 1.0 - ssim(pred.maps[s], targets.maps[s].to(pred.maps[s].scalar_type()), p);
    total = total.defined() ? total + term : term;
  }
  return total / static_cast<double>(kDepthScales);
}

torch::Tensor class_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  if (logits.dim() != 4 || labels.dim() != 3 || logits.size(0) != labels.size(0) ||
      logits.size(2) != labels.size(1) || logits.size(3) != labels.size(2)) {
    throw InputError("class_loss: logits " + c10::str(logits.sizes()) + " and labels " +
                     c10::str(labels.sizes()) + " are incompatible");
  }
  auto target = labels.to(torch::kLong);
  auto valid = target != kIgnoreLabel;
  if (!valid.any().item<bool>()) throw UndefinedLossError("class_loss: every pixel is ignored");
  auto bad = valid & ((target < 0) | (target >= logits.size(1)));
  if (bad.any().item<bool>()) throw InputError("class_loss: label outside the class range");
  return F::cross_entropy(logits, target,
                          F::CrossEntropyFuncOptions().ignore_index(kIgnoreLabel).reduction(torch::kMean));
}

LossReport total_loss(std::optional<double> depth, double cls) {
  LossReport r;
  r.depth_loss = depth;
  r.class_loss = cls;
  r.total = depth.value_or(0.0) + cls;
  return r;
}

}  // namespace depthseg
