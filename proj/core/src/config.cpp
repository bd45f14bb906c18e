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

#include "depthseg/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "depthseg/errors.hpp"
#include "depthseg/metrics.hpp"

namespace depthseg {

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

int default_batch_size(BackboneName name) {
  switch (name) {
    case BackboneName::kVitS:
    case BackboneName::kTiny:
      return 8;
    case BackboneName::kVitB:
      return 4;
    case BackboneName::kVitL:
      return 2;
  }
  return 8;
}

TrainConfig TrainConfig::for_backbone(BackboneName name) {
  TrainConfig c;
  c.backbone = name;
  c.batch_size = default_batch_size(name);
  return c;
}

TrainConfig TrainConfig::parse(const std::string& text) {
  const auto kv = parse_key_values(text);
  TrainConfig c;
  if (auto it = kv.find("backbone"); it != kv.end()) c = for_backbone(backbone_name_from_string(it->second));
  static const std::set<std::string> known = {
      "backbone", "backbone_weights", "adapter_enabled", "prompter_enabled", "lr0", "weight_decay",
      "beta1", "momentum", "beta2", "eps", "epochs", "steps", "milestones", "gamma", "batch_size",
      "seed", "ssim_window"};
  for (const auto& [key, value] : kv) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (key == "backbone_weights") c.backbone_weights = value;
    else if (key == "adapter_enabled") c.adapter_enabled = parse_bool(key, value);
    else if (key == "prompter_enabled") c.prompter_enabled = parse_bool(key, value);
    else if (key == "lr0") c.lr0 = parse_double(key, value);
    else if (key == "weight_decay") c.weight_decay = parse_double(key, value);
    else if (key == "beta1" || key == "momentum") c.beta1 = parse_double(key, value);
    else if (key == "beta2") c.beta2 = parse_double(key, value);
    else if (key == "eps") c.eps = parse_double(key, value);
    else if (key == "epochs") c.epochs = parse_int(key, value);
    else if (key == "steps") c.steps = parse_int(key, value);
    else if (key == "gamma") c.gamma = parse_double(key, value);
    else if (key == "batch_size") c.batch_size = parse_int(key, value);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "ssim_window") c.ssim_window = static_cast<int>(parse_int(key, value));
    else if (key == "milestones") {
      const auto comma = value.find(',');
      if (comma == std::string::npos) throw ConfigError("milestones must be two comma-separated fractions");
      c.milestones = {parse_double(key, value.substr(0, comma)), parse_double(key, value.substr(comma + 1))};
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "backbone=" << to_string(backbone) << '\n';
  if (backbone_weights) os << "backbone_weights=" << backbone_weights->string() << '\n';
  os << "adapter_enabled=" << (adapter_enabled ? "true" : "false") << '\n'
     << "prompter_enabled=" << (prompter_enabled ? "true" : "false") << '\n'
     << "lr0=" << fmt(lr0) << '\n'
     << "weight_decay=" << fmt(weight_decay) << '\n'
     << "beta1=" << fmt(beta1) << '\n'
     << "beta2=" << fmt(beta2) << '\n'
     << "eps=" << fmt(eps) << '\n'
     << "epochs=" << epochs << '\n';
  if (steps) os << "steps=" << *steps << '\n';
  os << "milestones=" << fmt(milestones[0]) << ',' << fmt(milestones[1]) << '\n'
     << "gamma=" << fmt(gamma) << '\n'
     << "batch_size=" << batch_size << '\n'
     << "seed=" << seed << '\n'
     << "ssim_window=" << ssim_window << '\n';
  return os.str();
}

BackboneConfig TrainConfig::backbone_config() const {
  auto cfg = BackboneConfig::preset(backbone);
  cfg.pretrained_weights = backbone_weights;
  return cfg;
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(milestones[0] > 0.0 && milestones[0] < milestones[1] && milestones[1] < 1.0))
    throw ConfigError("milestones must be strictly increasing within (0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("AdamW betas must lie in [0, 1)");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (steps && *steps <= 0) throw ConfigError("steps must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (ssim_window < 3 || ssim_window % 2 == 0) throw ConfigError("ssim_window must be odd and >= 3");
}

}  // namespace depthseg
