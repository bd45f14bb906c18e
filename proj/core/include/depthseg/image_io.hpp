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
#include <filesystem>
#include <vector>

#include <torch/torch.h>

#include "depthseg/label_mask.hpp"

namespace depthseg {

// Decoded PNG samples, row-major, interleaved channels. 8-bit files keep values 0..255.
struct RasterImage {
  std::int64_t height = 0;
  std::int64_t width = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

RasterImage read_png(const std::filesystem::path& path);
// bit_depth 8 or 16; channels 1 or 3.
void write_png(const std::filesystem::path& path, const RasterImage& image);

// 8-bit RGB -> 3 x H x W float in [0,1].
torch::Tensor read_image_tile(const std::filesystem::path& path);
void write_image_tile(const std::filesystem::path& path, const torch::Tensor& chw);

// Single-channel 8-bit class indices.
LabelMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const LabelMask& mask);

// Single-channel 16-bit, 0 -> 0.0 and 65535 -> 1.0. Returns H x W float.
torch::Tensor read_depth_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const torch::Tensor& hw);

}  // namespace depthseg
