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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "depthseg/backbone.hpp"

namespace depthseg {

int default_batch_size(BackboneName name);

// Mirrors the flat key=value config file; keys are the field names below.
struct TrainConfig {
  BackboneName backbone = BackboneName::kTiny;
  std::optional<std::filesystem::path> backbone_weights;
  bool adapter_enabled = true;
  bool prompter_enabled = true;
  double lr0 = 1e-4;
  double weight_decay = 0.001;
  double beta1 = 0.9;  // the recipe's "momentum"
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t epochs = 50;
  // Overrides epochs * steps_per_epoch when set.
  std::optional<std::int64_t> steps;
  std::array<double, 2> milestones{0.3, 0.6};  // fractions of total optimizer steps
  double gamma = 0.2;
  std::int64_t batch_size = 8;
  std::uint64_t seed = 0;
  int ssim_window = 11;

  static TrainConfig for_backbone(BackboneName name);
  static TrainConfig parse(const std::string& text);
  static TrainConfig from_file(const std::filesystem::path& path);
  std::string to_text() const;

  BackboneConfig backbone_config() const;
  void validate() const;  // ConfigError
};

}  // namespace depthseg
