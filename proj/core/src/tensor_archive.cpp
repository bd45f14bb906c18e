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

#include "depthseg/tensor_archive.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "depthseg/errors.hpp"

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian host");

namespace depthseg {
namespace {

constexpr std::array<char, 4> kMagic = {'D', 'S', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

std::uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32:
      return 0;
    case torch::kFloat64:
      return 1;
    case torch::kInt64:
      return 2;
    default:
      throw InputError("tensor archive: unsupported dtype " + std::string(c10::toString(t)));
  }
}

torch::ScalarType dtype_from_code(std::uint8_t c) {
  switch (c) {
    case 0:
      return torch::kFloat32;
    case 1:
      return torch::kFloat64;
    case 2:
      return torch::kInt64;
    default:
      throw ConfigError("tensor archive: unknown dtype code " + std::to_string(c));
  }
}

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw UnreadableFileError("truncated archive: " + path.string());
  return v;
}

}  // namespace

void TensorArchive::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw UnreadableFileError("cannot open for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<std::uint64_t>(os, tensors.size());
  for (const auto& [name, tensor] : tensors) {
    auto t = tensor.detach().to(torch::kCPU).contiguous();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(os, dtype_code(t.scalar_type()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dim()));
    for (auto d : t.sizes()) put<std::int64_t>(os, d);
    os.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
  }
  if (!os) throw UnreadableFileError("write failed: " + path.string());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UnreadableFileError("cannot open archive: " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ConfigError("not a tensor archive: " + path.string());
  if (auto v = get<std::uint32_t>(is, path); v != kVersion)
    throw ConfigError("unsupported archive version " + std::to_string(v));

  TensorArchive out;
  out.header.resize(get<std::uint64_t>(is, path));
  is.read(out.header.data(), static_cast<std::streamsize>(out.header.size()));
  const auto count = get<std::uint64_t>(is, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(is, path), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto dtype = dtype_from_code(get<std::uint8_t>(is, path));
    std::vector<std::int64_t> dims(get<std::uint32_t>(is, path));
    for (auto& d : dims) d = get<std::int64_t>(is, path);
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    is.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
    if (!is) throw UnreadableFileError("truncated archive: " + path.string());
    out.tensors.emplace(std::move(name), std::move(t));
  }
  return out;
}

bool TensorArchive::operator==(const TensorArchive& other) const {
  if (header != other.header || tensors.size() != other.tensors.size()) return false;
  for (const auto& [name, t] : tensors) {
    auto it = other.tensors.find(name);
    if (it == other.tensors.end()) return false;
    const auto& u = it->second;
    if (t.scalar_type() != u.scalar_type() || t.sizes() != u.sizes()) return false;
    auto a = t.contiguous();
    auto b = u.contiguous();
    if (std::memcmp(a.data_ptr(), b.data_ptr(), a.nbytes()) != 0) return false;
  }
  return true;
}

void load_module_state(torch::nn::Module& module, const TensorArchive& archive,
                       const std::string& prefix) {
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& name, torch::Tensor& target) {
    auto it = archive.tensors.find(prefix + name);
    if (it == archive.tensors.end()) throw ConfigError("missing tensor '" + prefix + name + "'");
    if (it->second.sizes() != target.sizes()) {
      throw ConfigError("shape mismatch for '" + prefix + name + "': file " +
                        c10::str(it->second.sizes()) + " vs model " + c10::str(target.sizes()));
    }
    target.copy_(it->second);
  };
  for (auto& item : module.named_parameters()) assign(item.key(), item.value());
  for (auto& item : module.named_buffers()) assign(item.key(), item.value());
}

void store_module_state(const torch::nn::Module& module, TensorArchive& archive,
                        const std::string& prefix) {
  for (const auto& item : module.named_parameters())
    archive.tensors[prefix + item.key()] = item.value().detach().clone();
  for (const auto& item : module.named_buffers())
    archive.tensors[prefix + item.key()] = item.value().detach().clone();
}

}  // namespace depthseg
