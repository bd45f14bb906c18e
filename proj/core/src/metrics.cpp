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

#include "depthseg/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "depthseg/errors.hpp"

namespace depthseg {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : n_(num_classes), counts_(static_cast<std::size_t>(num_classes * num_classes), 0) {
  if (num_classes <= 0) throw InputError("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw InputError("cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

void accumulate(ConfusionMatrix& cm, std::span<const std::uint8_t> pred,
                std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size())
    throw InputError("prediction and ground truth masks differ in size");
  const int n = cm.num_classes();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt[i];
    if (g == kIgnoreLabel) continue;
    const int p = pred[i];
    if (g >= n || p >= n)
      throw InputError("class value " + std::to_string(g >= n ? g : p) + " out of range");
    ++cm(g, p);
  }
}

void accumulate(ConfusionMatrix& cm, const LabelMask& pred, const LabelMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw InputError("prediction and ground truth masks differ in shape");
  accumulate(cm, pred.view(), gt.view());
}

double binary_kappa(double tp, double fp, double fn, double tn) {
  return 2.0 * (tp * tn - fn * fp) / ((tp + fp) * (fp + tn) + (tp + fn) * (fn + tn));
}

MetricReport compute_report(const ConfusionMatrix& cm) {
  const auto total_count = cm.total();
  if (total_count == 0) throw UndefinedMetricError("confusion matrix is empty");
  const int n = cm.num_classes();
  const double total = static_cast<double>(total_count);

  std::vector<double> row(n, 0.0), col(n, 0.0);
  double trace = 0.0;
  for (int g = 0; g < n; ++g) {
    for (int p = 0; p < n; ++p) {
      const double c = static_cast<double>(cm(g, p));
      row[g] += c;
      col[p] += c;
    }
    trace += static_cast<double>(cm(g, g));
  }

  MetricReport r;
  r.per_class.resize(n);
  auto ratio = [](double num, double den, const char* name, ClassMetrics& m) {
    if (den == 0.0) {
      m.undefined.emplace_back(name);
      return 0.0;
    }
    return num / den;
  };
  double oa_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tp = static_cast<double>(cm(i, i));
    const double fp = col[i] - tp;
    const double fn = row[i] - tp;
    const double tn = total - tp - fp - fn;
    auto& m = r.per_class[i];
    m.precision = ratio(tp, tp + fp, "precision", m);
    m.recall = ratio(tp, tp + fn, "recall", m);
    m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn, "f1", m);
    m.iou = ratio(tp, tp + fp + fn, "iou", m);
    r.mPre += m.precision;
    r.mRecall += m.recall;
    r.mF1 += m.f1;
    r.mIoU += m.iou;
    oa_sum += (tp + tn) / total;
  }
  r.mPre /= n;
  r.mRecall /= n;
  r.mF1 /= n;
  r.mIoU /= n;
  r.OA = oa_sum / n;
  r.pixel_accuracy = trace / total;

  const double po = trace / total;
  double pe = 0.0;
  for (int i = 0; i < n; ++i) pe += (row[i] / total) * (col[i] / total);
  // pe == 1 only when every pixel sits in one class on both axes, i.e. perfect agreement.
  r.Kappa = pe >= 1.0 ? 1.0 : (po - pe) / (1.0 - pe);
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12f", v);
  return buf;
}

}  // namespace

std::string format_report(const MetricReport& report, std::span<const std::string> class_names) {
  std::ostringstream os;
  os << "mPre=" << fmt(report.mPre) << '\n'
     << "mRecall=" << fmt(report.mRecall) << '\n'
     << "mF1=" << fmt(report.mF1) << '\n'
     << "mIoU=" << fmt(report.mIoU) << '\n'
     << "OA=" << fmt(report.OA) << '\n'
     << "Kappa=" << fmt(report.Kappa) << '\n'
     << "pixel_accuracy=" << fmt(report.pixel_accuracy) << '\n'
     << "num_classes=" << report.per_class.size() << '\n';
  for (std::size_t i = 0; i < report.per_class.size(); ++i) {
    const auto& m = report.per_class[i];
    const std::string k = "class." + std::to_string(i) + ".";
    if (i < class_names.size()) os << k << "name=" << class_names[i] << '\n';
    os << k << "precision=" << fmt(m.precision) << '\n'
       << k << "recall=" << fmt(m.recall) << '\n'
       << k << "f1=" << fmt(m.f1) << '\n'
       << k << "iou=" << fmt(m.iou) << '\n'
       << k << "undefined=";
    if (m.undefined.empty()) os << "none";
    for (std::size_t j = 0; j < m.undefined.size(); ++j) os << (j ? "," : "") << m.undefined[j];
    os << '\n';
  }
  return os.str();
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace depthseg
