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

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <torch/torch.h>

#include "depthseg/label_mask.hpp"
#include "depthseg/metrics.hpp"

namespace depthseg::testing {

// Brute-force metrics straight from pixel pairs: per class, every pixel is visited and
// classified as TP, FP, FN or TN; no confusion matrix is involved.
struct OracleMetrics {
  double mPre = 0, mRecall = 0, mF1 = 0, mIoU = 0, OA = 0, Kappa = 0;
};

inline OracleMetrics oracle_metrics(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt,
                                    int num_classes) {
  OracleMetrics m;
  double total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) total += gt[i] != kIgnoreLabel;
  auto safe = [](double num, double den) { return den == 0 ? 0.0 : num / den; };
  for (int k = 0; k < num_classes; ++k) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] == kIgnoreLabel) continue;
      const bool is_gt = gt[i] == k, is_pred = pred[i] == k;
      if (is_gt && is_pred) tp += 1;
      else if (!is_gt && is_pred) fp += 1;
      else if (is_gt && !is_pred) fn += 1;
      else tn += 1;
    }
    m.mPre += safe(tp, tp + fp) / num_classes;
    m.mRecall += safe(tp, tp + fn) / num_classes;
    m.mF1 += safe(2 * tp, 2 * tp + fp + fn) / num_classes;
    m.mIoU += safe(tp, tp + fp + fn) / num_classes;
    m.OA += (tp + tn) / (tp + tn + fp + fn) / num_classes;
  }
  double agree = 0;
  std::vector<double> gt_count(num_classes, 0), pred_count(num_classes, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kIgnoreLabel) continue;
    agree += gt[i] == pred[i];
    gt_count[gt[i]] += 1;
    pred_count[pred[i]] += 1;
  }
  const double po = agree / total;
  double pe = 0;
  for (int k = 0; k < num_classes; ++k) pe += (gt_count[k] / total) * (pred_count[k] / total);
  m.Kappa = pe == 1.0 ? 1.0 : (po - pe) / (1 - pe);
  return m;
}

inline std::vector<std::uint8_t> random_mask_values(std::mt19937_64& rng, std::size_t n, int num_classes) {
  std::uniform_int_distribution<int> d(0, num_classes - 1);
  std::vector<std::uint8_t> v(n);
  for (auto& x : v) x = static_cast<std::uint8_t>(d(rng));
  return v;
}

// Prediction that agrees with `gt` on roughly `agreement` of the pixels.
inline std::vector<std::uint8_t> noisy_copy(std::mt19937_64& rng, const std::vector<std::uint8_t>& gt,
                                            double agreement, int num_classes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> d(0, num_classes - 1);
  std::vector<std::uint8_t> v(gt);
  for (auto& x : v)
    if (u(rng) > agreement) x = static_cast<std::uint8_t>(d(rng));
  return v;
}

// Central differences in float64 against autograd; returns |analytic - numeric| / |numeric|
// over the whole gradient vector.
inline double relative_gradient_error(const std::function<torch::Tensor(const torch::Tensor&)>& f, torch::Tensor x,
                                      double h = 1e-4) {
  x = x.clone().set_requires_grad(true);
  auto analytic = torch::autograd::grad({f(x)}, {x})[0].reshape(-1);
  auto flat = x.detach().clone().view(-1);
  auto numeric = torch::zeros_like(flat);
  for (std::int64_t i = 0; i < flat.numel(); ++i) {
    const double keep = flat[i].item<double>();
    flat[i] = keep + h;
    const double up = f(flat.view(x.sizes())).item<double>();
    flat[i] = keep - h;
    const double down = f(flat.view(x.sizes())).item<double>();
    flat[i] = keep;
    numeric[i] = (up - down) / (2 * h);
  }
  return ((analytic - numeric).norm() / numeric.norm()).item<double>();
}

}  // namespace depthseg::testing
