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
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "depthseg/depth_branch.hpp"
#include "depthseg/image_io.hpp"
#include "depthseg/label_mask.hpp"

namespace depthseg {

// Class indices follow the map legend order.
enum class LandCover : std::uint8_t {
  kWater = 0,
  kRoad = 1,
  kBuildings = 2,
  kFarmland = 3,
  kForest = 4,
  kBareLand = 5,
  kImpervious = 6,
};

struct ClassSchema {
  std::array<std::string, kNumClasses> names;
  std::array<std::array<std::uint8_t, 3>, kNumClasses> colors;
  std::array<std::uint8_t, 3> ignore_color{0, 0, 0};

  static const ClassSchema& land_cover();

  // Throws IllegalClassError on values outside the schema (ignore is allowed).
  void validate(const LabelMask& mask) const;
  RasterImage render(const LabelMask& mask) const;
  // Inverse of render; unknown colors throw IllegalClassError.
  LabelMask decode(const RasterImage& rgb) const;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int size = 64;
  double building_density = 0.3;
  double sun_azimuth_deg = 135.0;  // direction towards the sun, clockwise from image up
  double sun_elevation_deg = 45.0;
  int road_width = 8;  // pixels, rounded up to whole 8-pixel cells
  int water_blobs = 1;

  void validate() const;  // InputError
  // Denser buildings under a low sun: more roofs and longer cast shadows.
  static SceneSpec shadow_stress(std::uint64_t seed, int size);
};

struct Scene {
  torch::Tensor image;   // 3 x S x S in [0,1]
  LabelMask mask;
  // S x S object height above the ground (roofs only; zero elsewhere).
  torch::Tensor height;
  // S x S smoothed surface elevation: water lowest, land above it, forest canopy and
  // roofs on top. This is what the oracle pseudo-label provider serves.
  torch::Tensor elevation;
  std::vector<std::uint8_t> shadow;  // S*S flags, 1 where a cast shadow darkened the pixel
};

// Procedural land-cover scene. Roofs and impervious plazas share one texture
// distribution; buildings cast shadows away from the sun with length proportional to
// height. Label boundaries sit on an 8-pixel grid. Deterministic in spec.seed.
Scene generate_scene(const SceneSpec& spec);

// Tiles of a rows x cols grid, row-major; the last row may be partial.
struct TileGrid {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::string> ids;

  static TileGrid for_count(std::int64_t count);
};

struct SplitSets {
  std::vector<std::string> train, val, test;
};

// Floor-then-distribute counts (largest remainder, ties to the earlier block), then every
// empty block takes one tile from the largest. Blocks are consecutive runs of a column- or
// row-major traversal chosen by `seed`, so each block is spatially contiguous.
std::array<std::int64_t, 3> split_counts(std::int64_t n, const std::array<double, 3>& ratios);
SplitSets split_spatial(const TileGrid& grid, const std::array<double, 3>& ratios, std::uint64_t seed);

// Train/val/test proportions of the reference dataset (7047 : 4209 : 4071).
inline constexpr std::array<double, 3> kReferenceSplitRatios = {0.46, 0.27, 0.27};

struct Sample {
  std::string tile_id;
  torch::Tensor image;                 // 3 x H x W in [0,1]
  LabelMask mask;
  std::optional<torch::Tensor> depth;  // H x W normalized to [0,1]
};

Sample load_sample(const std::filesystem::path& image_path, const std::filesystem::path& mask_path,
                   const std::optional<std::filesystem::path>& depth_path, bool require_depth);

// Directory layout: <root>/images/<id>.png, <root>/masks/<id>.png,
// <root>/depth/<id>_depth.png, and <root>/splits.txt with `id<TAB>split` lines.
struct DatasetLayout {
  std::filesystem::path root;

  std::filesystem::path image(const std::string& id) const { return root / "images" / (id + ".png"); }
  std::filesystem::path mask(const std::string& id) const { return root / "masks" / (id + ".png"); }
  std::filesystem::path depth(const std::string& id) const {
    return root / "depth" / (id + "_depth.png");
  }
  std::filesystem::path manifest() const { return root / "splits.txt"; }
};

void write_split_manifest(const std::filesystem::path& path, const SplitSets& splits);
// Ids of one split in manifest order. Unknown split names throw InputError.
std::vector<std::string> read_split(const std::filesystem::path& manifest, std::string_view split);

std::vector<Sample> load_split(const DatasetLayout& layout, std::string_view split, bool require_depth);

// Stacks samples into N x 3 x H x W images and N x H x W int64 labels.
torch::Tensor stack_images(const std::vector<const Sample*>& batch);
torch::Tensor stack_labels(const std::vector<const Sample*>& batch);

// Generates `count` scenes on a TileGrid and writes them (with the split manifest) to `root`.
struct SynthOptions {
  std::int64_t tiles = 16;
  int size = 64;
  std::uint64_t seed = 1;
  bool shadow_stress = false;
};
SplitSets synthesize_dataset(const std::filesystem::path& root, const SynthOptions& options);

// Builds the scene spec used for tile `index` of a synthesized dataset.
SceneSpec scene_spec_for_tile(const SynthOptions& options, std::int64_t index);

// The same scenes kept in memory, with depth normalized from the elevation field and an
// oracle pseudo-label provider over the raw elevations.
struct SyntheticSet {
  std::vector<Sample> samples;
  SplitSets splits;
  OraclePseudoLabelProvider oracle;

  std::vector<Sample> subset(const std::vector<std::string>& ids) const;
};
SyntheticSet synthesize_in_memory(const SynthOptions& options);

}  // namespace depthseg
