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

#include "depthseg/run_manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "depthseg/errors.hpp"

namespace depthseg {

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnreadableFileError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

namespace {

void add_path(std::vector<ManifestFile>& list, const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) list.push_back({f.generic_string(), file_checksum(f)});
  } else {
    list.push_back({path.generic_string(), file_checksum(path)});
  }
}

}  // namespace

void RunManifest::add_input(const std::filesystem::path& path) { add_path(inputs, path); }
void RunManifest::add_output(const std::filesystem::path& path) { add_path(outputs, path); }

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "command=" << command << '\n' << "seed=" << seed << '\n';
  std::istringstream cfg(config_text);
  for (std::string line; std::getline(cfg, line);)
    if (!line.empty()) os << "config." << line << '\n';
  char hex[32];
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(inputs[i].checksum));
    os << "input." << i << '=' << inputs[i].path << ' ' << hex << '\n';
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(outputs[i].checksum));
    os << "output." << i << '=' << outputs[i].path << ' ' << hex << '\n';
  }
  return os.str();
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UnreadableFileError("cannot write " + path.string());
  out << to_text();
}

}  // namespace depthseg
