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
#include <string>
#include <vector>

namespace depthseg {

// FNV-1a 64 over the file bytes.
std::uint64_t file_checksum(const std::filesystem::path& path);

struct ManifestFile {
  std::string path;
  std::uint64_t checksum = 0;
};

// Plain-text record of a run: the command line, the resolved configuration and the
// checksums of every input and output. Contains no timestamps so reruns compare equal.
struct RunManifest {
  std::string command;
  std::string config_text;
  std::uint64_t seed = 0;
  std::vector<ManifestFile> inputs;
  std::vector<ManifestFile> outputs;

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  std::string to_text() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace depthseg
