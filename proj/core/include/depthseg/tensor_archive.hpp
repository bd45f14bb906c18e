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

#include <filesystem>
#include <map>
#include <string>

#include <torch/torch.h>

namespace depthseg {

// Flat, ordered map of named tensors plus a free-form text header.
//
// On-disk layout (all integers little-endian):
//
//   char[4]   magic "DSTA"
//   u32       format version (1)
//   u64       header byte length, then that many bytes of UTF-8 text
//   u64       tensor count
//   per tensor, in lexicographic name order:
//     u32     name length, then name bytes
//     u8      dtype code (0 = float32, 1 = float64, 2 = int64)
//     u32     rank, then rank x i64 dimensions
//     raw contiguous element bytes
//
// Used for backbone weight files and training checkpoints.
struct TensorArchive {
  std::string header;
  std::map<std::string, torch::Tensor> tensors;

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

  bool operator==(const TensorArchive& other) const;
};

// Copies every tensor whose name starts with `prefix` into `module`'s parameters and
// buffers (name with prefix stripped). Missing entries or shape mismatches throw ConfigError.
void load_module_state(torch::nn::Module& module, const TensorArchive& archive,
                       const std::string& prefix = "");
void store_module_state(const torch::nn::Module& module, TensorArchive& archive,
                        const std::string& prefix = "");

}  // namespace depthseg
