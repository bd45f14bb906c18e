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

#include "depthseg/image_io.hpp"

#include <png.h>

#include <algorithm>

#include <cmath>
#include <cstdio>
#include <memory>

#include "depthseg/errors.hpp"

namespace depthseg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw UnreadableFileError("cannot open " + path.string());
  return f;
}

}  // namespace

RasterImage read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw UnreadableFileError("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw UnreadableFileError("libpng initialization failed");
  }
  RasterImage img;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw UnreadableFileError("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  const auto stride = png_get_rowbytes(png, info);
  buffer.resize(stride * img.height);
  rows.resize(img.height);
  for (std::int64_t y = 0; y < img.height; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const auto n = static_cast<std::size_t>(img.height * img.width * img.channels);
  img.samples.resize(n);
  if (img.bit_depth == 16) {
    for (std::int64_t y = 0; y < img.height; ++y) {
      const auto* row = reinterpret_cast<const std::uint16_t*>(rows[y]);
      std::copy(row, row + img.width * img.channels, img.samples.begin() + y * img.width * img.channels);
    }
  } else {
    for (std::int64_t y = 0; y < img.height; ++y)
      std::copy(rows[y], rows[y] + img.width * img.channels,
                img.samples.begin() + y * img.width * img.channels);
  }
  return img;
}

void write_png(const std::filesystem::path& path, const RasterImage& image) {
  if (image.bit_depth != 8 && image.bit_depth != 16) throw InputError("PNG bit depth must be 8 or 16");
  if (image.channels != 1 && image.channels != 3) throw InputError("PNG must have 1 or 3 channels");
  const auto row_samples = image.width * image.channels;
  if (static_cast<std::int64_t>(image.samples.size()) != row_samples * image.height)
    throw InputError("PNG sample buffer does not match its geometry");

  const std::size_t bytes_per_sample = image.bit_depth / 8;
  std::vector<png_byte> buffer(image.samples.size() * bytes_per_sample);
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    if (image.bit_depth == 16) {
      buffer[2 * i] = static_cast<png_byte>(image.samples[i] >> 8);  // PNG is big-endian
      buffer[2 * i + 1] = static_cast<png_byte>(image.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(image.samples[i]);
    }
  }

  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw UnreadableFileError("libpng initialization failed");
  }
  std::vector<png_bytep> rows(image.height);
  for (std::int64_t y = 0; y < image.height; ++y)
    rows[y] = buffer.data() + y * row_samples * bytes_per_sample;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw UnreadableFileError("failed writing PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               image.bit_depth, image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

torch::Tensor read_image_tile(const std::filesystem::path& path) {
  auto img = read_png(path);
  if (img.channels != 3 || img.bit_depth != 8)
    throw UnreadableFileError("expected an 8-bit RGB image: " + path.string());
  auto t = torch::empty({img.height, img.width, 3}, torch::kFloat32);
  auto* out = t.data_ptr<float>();
  for (std::size_t i = 0; i < img.samples.size(); ++i) out[i] = img.samples[i] / 255.0f;
  return t.permute({2, 0, 1}).contiguous();
}

void write_image_tile(const std::filesystem::path& path, const torch::Tensor& chw) {
  auto hwc = chw.detach().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  RasterImage img{hwc.size(0), hwc.size(1), 3, 8, {}};
  img.samples.resize(hwc.numel());
  const auto* in = hwc.data_ptr<float>();
  for (std::size_t i = 0; i < img.samples.size(); ++i)
    img.samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(in[i], 0.0f, 1.0f) * 255.0f));
  write_png(path, img);
}

LabelMask read_mask_png(const std::filesystem::path& path) {
  auto img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 8)
    throw UnreadableFileError("expected a single-channel 8-bit mask: " + path.string());
  LabelMask mask(img.height, img.width);
  std::copy(img.samples.begin(), img.samples.end(), mask.classes.begin());
  return mask;
}

void write_mask_png(const std::filesystem::path& path, const LabelMask& mask) {
  RasterImage img{mask.height, mask.width, 1, 8, {}};
  img.samples.assign(mask.classes.begin(), mask.classes.end());
  write_png(path, img);
}

torch::Tensor read_depth_png(const std::filesystem::path& path) {
  auto img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 16)
    throw UnreadableFileError("expected a single-channel 16-bit depth map: " + path.string());
  auto t = torch::empty({img.height, img.width}, torch::kFloat32);
  auto* out = t.data_ptr<float>();
  for (std::size_t i = 0; i < img.samples.size(); ++i) out[i] = img.samples[i] / 65535.0f;
  return t;
}

void write_depth_png(const std::filesystem::path& path, const torch::Tensor& hw) {
  auto d = hw.detach().to(torch::kFloat64).contiguous();
  if (d.dim() != 2) throw InputError("depth map must be H x W");
  RasterImage img{d.size(0), d.size(1), 1, 16, {}};
  img.samples.resize(d.numel());
  const auto* in = d.data_ptr<double>();
  for (std::size_t i = 0; i < img.samples.size(); ++i)
    img.samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(in[i], 0.0, 1.0) * 65535.0));
  write_png(path, img);
}

}  // namespace depthseg
