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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "depthseg/label_mask.hpp"

namespace depthseg {

// counts(g, p): pixels with ground truth g predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes = kNumClasses);

  int num_classes() const { return n_; }
  std::uint64_t operator()(int gt, int pred) const { return counts_[gt * n_ + pred]; }
  std::uint64_t& operator()(int gt, int pred) { return counts_[gt * n_ + pred]; }
  std::uint64_t total() const;

  // Elementwise add; used to merge per-worker matrices.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int n_;
  std::vector<std::uint64_t> counts_;
};

// Adds every pixel whose ground truth is not kIgnoreLabel. Throws InputError on size
// mismatch or a class value outside {0..N-1} (predictions may not be ignore).
void accumulate(ConfusionMatrix& cm, std::span<const std::uint8_t> pred,
                std::span<const std::uint8_t> gt);
void accumulate(ConfusionMatrix& cm, const LabelMask& pred, const LabelMask& gt);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  // Ratios whose denominator was zero; they were scored 0.
  std::vector<std::string> undefined;
};

struct MetricReport {
  double mPre = 0.0;
  double mRecall = 0.0;
  double mF1 = 0.0;
  double mIoU = 0.0;
  double OA = 0.0;     // macro form: mean over classes of (TP + TN) / total
  double Kappa = 0.0;  // multiclass Cohen's kappa
  double pixel_accuracy = 0.0;  // trace / total, diagnostic only
  std::vector<ClassMetrics> per_class;
};

// Throws UndefinedMetricError on an empty matrix.
MetricReport compute_report(const ConfusionMatrix& cm);

// Two-class closed form 2(TP*TN - FN*FP) / ((TP+FP)(FP+TN) + (TP+FN)(FN+TN)).
double binary_kappa(double tp, double fp, double fn, double tn);

// Flat `key=value` text, one metric per line followed by `class.<i>.<metric>` blocks.
// Key names are stable.
std::string format_report(const MetricReport& report, std::span<const std::string> class_names = {});
std::map<std::string, std::string> parse_key_values(const std::string& text);

}  // namespace depthseg
