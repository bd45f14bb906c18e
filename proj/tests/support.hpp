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

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <unistd.h>

#include <torch/torch.h>

#include "depthseg/backbone.hpp"
#include "depthseg/pyramids.hpp"

namespace depthseg::testing {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("depthseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline BackboneConfig tiny() { return BackboneConfig::preset(BackboneName::kTiny); }

inline torch::Tensor random_images(std::int64_t n, std::int64_t h, std::int64_t w, std::uint64_t seed = 0) {
  torch::manual_seed(seed);
  return torch::rand({n, 3, h, w});
}

// Random feature pyramid honoring the stride contract for an h x w tile.
inline FeaturePyramid random_pyramid(const std::array<int, kPyramidLevels>& channels, std::int64_t n,
                                     std::int64_t h, std::int64_t w) {
  FeaturePyramid f;
  for (int i = 0; i < kPyramidLevels; ++i)
    f.levels[i] = torch::randn({n, channels[i], h / level_stride(i), w / level_stride(i)});
  return f;
}

inline DepthPyramid random_depth(std::int64_t n, std::int64_t h, std::int64_t w) {
  DepthPyramid d;
  for (int s = 0; s < kDepthScales; ++s)
    d.maps[s] = torch::rand({n, 1, h / depth_stride(s), w / depth_stride(s)});
  return d;
}

}  // namespace depthseg::testing
