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
#include <span>
#include <vector>

namespace depthseg {

inline constexpr int kNumClasses = 7;
inline constexpr std::uint8_t kIgnoreLabel = 255;

// Row-major H x W class indices in {0..kNumClasses-1} plus kIgnoreLabel.
struct LabelMask {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::uint8_t> classes;

  LabelMask() = default;
  LabelMask(std::int64_t h, std::int64_t w, std::uint8_t fill = 0)
      : height(h), width(w), classes(static_cast<std::size_t>(h * w), fill) {}

  std::uint8_t& at(std::int64_t y, std::int64_t x) { return classes[y * width + x]; }
  std::uint8_t at(std::int64_t y, std::int64_t x) const { return classes[y * width + x]; }
  std::span<const std::uint8_t> view() const { return classes; }

  bool operator==(const LabelMask&) const = default;
};

}  // namespace depthseg
