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

#include "depthseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "depthseg/errors.hpp"

namespace depthseg {

namespace {

constexpr int kCell = 8;              // label grid, matches the tiny patch size
constexpr double kHeightToPixels = 10.0;
constexpr double kWaterLevel = 0.0;
constexpr double kLandLevel = 0.2;  // banks sit above the water surface
constexpr double kCanopyHeight = 0.15;
constexpr double kElevationBlurPx = 2.0;
constexpr float kShadowFactor = 0.42f;

// Separable Gaussian with clamped borders; the elevation raster is sampled with a soft
// point spread rather than as hard cell steps.
void blur_elevation(float* field, int size) {
  const int radius = static_cast<int>(std::ceil(3.0 * kElevationBlurPx));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i)
    sum += kernel[i + radius] = std::exp(-0.5 * i * i / (kElevationBlurPx * kElevationBlurPx));
  for (auto& k : kernel) k /= sum;
  std::vector<float> tmp(static_cast<std::size_t>(size * size));
  auto clamp = [&](int v) { return std::clamp(v, 0, size - 1); };
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * field[y * size + clamp(x + i)];
      tmp[y * size + x] = static_cast<float>(acc);
    }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp[clamp(y + i) * size + x];
      field[y * size + x] = static_cast<float>(acc);
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

using Rgb = std::array<float, 3>;

}  // namespace

const ClassSchema& ClassSchema::land_cover() {
  static const ClassSchema schema{
      {"water", "road", "buildings", "farmland", "forest", "bare_land", "impervious_surface"},
      {{{0, 92, 230}, {255, 170, 0}, {230, 0, 0}, {255, 255, 115}, {38, 115, 0}, {168, 112, 0},
        {178, 178, 178}}},
      {0, 0, 0}};
  return schema;
}

void ClassSchema::validate(const LabelMask& mask) const {
  for (auto v : mask.classes) {
    if (v >= kNumClasses && v != kIgnoreLabel)
      throw IllegalClassError("illegal class value " + std::to_string(v) + " in mask");
  }
}

RasterImage ClassSchema::render(const LabelMask& mask) const {
  validate(mask);
  RasterImage img{mask.height, mask.width, 3, 8, {}};
  img.samples.resize(mask.classes.size() * 3);
  for (std::size_t i = 0; i < mask.classes.size(); ++i) {
    const auto v = mask.classes[i];
    const auto& c = v == kIgnoreLabel ? ignore_color : colors[v];
    for (int k = 0; k < 3; ++k) img.samples[3 * i + k] = c[k];
  }
  return img;
}

LabelMask ClassSchema::decode(const RasterImage& rgb) const {
  if (rgb.channels != 3) throw InputError("color mask must be RGB");
  LabelMask mask(rgb.height, rgb.width);
  for (std::size_t i = 0; i < mask.classes.size(); ++i) {
    const std::array<std::uint8_t, 3> px{static_cast<std::uint8_t>(rgb.samples[3 * i]),
                                         static_cast<std::uint8_t>(rgb.samples[3 * i + 1]),
                                         static_cast<std::uint8_t>(rgb.samples[3 * i + 2])};
    if (px == ignore_color) {
      mask.classes[i] = kIgnoreLabel;
      continue;
    }
    auto it = std::find(colors.begin(), colors.end(), px);
    if (it == colors.end()) throw IllegalClassError("color not in class schema");
    mask.classes[i] = static_cast<std::uint8_t>(it - colors.begin());
  }
  return mask;
}

void SceneSpec::validate() const {
  if (size <= 0 || size % 32 != 0) throw InputError("scene size must be a positive multiple of 32");
  if (!(building_density >= 0.0 && building_density <= 1.0))
    throw InputError("building density must lie in [0, 1]");
  if (!(sun_elevation_deg > 0.0 && sun_elevation_deg <= 90.0))
    throw InputError("sun elevation must lie in (0, 90] degrees");
  if (!std::isfinite(sun_azimuth_deg)) throw InputError("sun azimuth must be finite");
  if (road_width < 1) throw InputError("road width must be at least one pixel");
  if (water_blobs < 0) throw InputError("water blob count must be non-negative");
}

SceneSpec SceneSpec::shadow_stress(std::uint64_t seed, int size) {
  SceneSpec s;
  s.seed = seed;
  s.size = size;
  s.building_density = 0.6;
  s.sun_elevation_deg = 30.0;
  return s;
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(splitmix64(spec.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(std::floor(unit(rng) * (hi - lo + 1)));
  };

  const int size = spec.size;
  const int grid = size / kCell;
  std::vector<std::uint8_t> cell(static_cast<std::size_t>(grid * grid));
  std::vector<double> cell_height(cell.size(), 0.0);
  std::vector<int> cell_object(cell.size(), -1);  // roof/plaza id for shared tints

  // Ground: 2x2-cell regions cycling through the three ground covers.
  const int region = 2;
  const int regions_per_side = std::max(1, grid / region);
  std::vector<LandCover> ground;
  const std::array<LandCover, 3> covers{LandCover::kFarmland, LandCover::kForest, LandCover::kBareLand};
  for (int i = 0; i < regions_per_side * regions_per_side; ++i)
    ground.push_back(i < 3 ? covers[i] : covers[uniform_int(0, 2)]);
  std::shuffle(ground.begin(), ground.end(), rng);
  for (int cy = 0; cy < grid; ++cy)
    for (int cx = 0; cx < grid; ++cx) {
      const int ry = std::min(cy / region, regions_per_side - 1);
      const int rx = std::min(cx / region, regions_per_side - 1);
      cell[cy * grid + cx] = static_cast<std::uint8_t>(ground[ry * regions_per_side + rx]);
    }

  // Roads: one horizontal and one vertical.
  const int road_cells = std::min(grid, (spec.road_width + kCell - 1) / kCell);
  const int road_row = uniform_int(0, grid - road_cells);
  const int road_col = uniform_int(0, grid - road_cells);
  for (int cy = 0; cy < grid; ++cy)
    for (int cx = 0; cx < grid; ++cx)
      if ((cy >= road_row && cy < road_row + road_cells) || (cx >= road_col && cx < road_col + road_cells))
        cell[cy * grid + cx] = static_cast<std::uint8_t>(LandCover::kRoad);

  // Water blobs: discs in cell units.
  for (int b = 0; b < spec.water_blobs; ++b) {
    const double ccx = unit(rng) * grid, ccy = unit(rng) * grid;
    const double radius = 1.0 + unit(rng);
    for (int cy = 0; cy < grid; ++cy)
      for (int cx = 0; cx < grid; ++cx) {
        const double dx = cx + 0.5 - ccx, dy = cy + 0.5 - ccy;
        if (dx * dx + dy * dy <= radius * radius) cell[cy * grid + cx] = static_cast<std::uint8_t>(LandCover::kWater);
      }
  }

  auto is_ground = [&](int cy, int cx) {
    const auto c = static_cast<LandCover>(cell[cy * grid + cx]);
    return c == LandCover::kFarmland || c == LandCover::kForest || c == LandCover::kBareLand;
  };
  int next_object = 0;
  auto place_rect = [&](LandCover cover, double height) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const int w = uniform_int(1, 2), h = uniform_int(1, 2);
      if (w > grid || h > grid) return false;
      const int x0 = uniform_int(0, grid - w), y0 = uniform_int(0, grid - h);
      bool free = true;
      for (int cy = y0; cy < y0 + h && free; ++cy)
        for (int cx = x0; cx < x0 + w && free; ++cx) free = is_ground(cy, cx);
      if (!free) continue;
      for (int cy = y0; cy < y0 + h; ++cy)
        for (int cx = x0; cx < x0 + w; ++cx) {
          cell[cy * grid + cx] = static_cast<std::uint8_t>(cover);
          cell_height[cy * grid + cx] = height;
          cell_object[cy * grid + cx] = next_object;
        }
      ++next_object;
      return true;
    }
    return false;
  };

  const int buildings = spec.building_density > 0.0
                            ? std::max(1, static_cast<int>(std::lround(spec.building_density * grid * grid / 6.0)))
                            : 0;
  for (int i = 0; i < buildings; ++i) place_rect(LandCover::kBuildings, 0.3 + 0.7 * unit(rng));
  const int plazas = std::max(1, buildings / 2);
  for (int i = 0; i < plazas; ++i) place_rect(LandCover::kImpervious, 0.0);

  // Shared tint distribution for roofs and plazas.
  std::vector<Rgb> object_tint(static_cast<std::size_t>(next_object));
  for (auto& t : object_tint) {
    const float base = 0.60f + 0.12f * static_cast<float>(unit(rng));
    t = {base, base * 0.97f, base * 0.92f};
  }

  Scene scene;
  scene.mask = LabelMask(size, size);
  scene.height = torch::zeros({size, size}, torch::kFloat32);
  scene.elevation = torch::zeros({size, size}, torch::kFloat32);
  scene.shadow.assign(static_cast<std::size_t>(size * size), 0);
  auto* height = scene.height.data_ptr<float>();
  auto* elevation = scene.elevation.data_ptr<float>();
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int ci = (y / kCell) * grid + (x / kCell);
      const auto cover = static_cast<LandCover>(cell[ci]);
      scene.mask.at(y, x) = cell[ci];
      height[y * size + x] = static_cast<float>(cell_height[ci]);
      double z = cover == LandCover::kWater ? kWaterLevel : kLandLevel + cell_height[ci];
      if (cover == LandCover::kForest) z += kCanopyHeight;
      elevation[y * size + x] = static_cast<float>(z);
    }
  blur_elevation(elevation, size);

  // Cast shadows by marching from each non-building pixel towards the sun.
  const double az = spec.sun_azimuth_deg * std::numbers::pi / 180.0;
  const double sun_dx = std::sin(az), sun_dy = -std::cos(az);
  const double rise = std::tan(spec.sun_elevation_deg * std::numbers::pi / 180.0);
  const double max_height = kHeightToPixels * 1.0;
  const int march = spec.sun_elevation_deg >= 90.0 ? 0 : static_cast<int>(std::ceil(max_height / rise));
  if (buildings > 0) {
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        if (scene.mask.at(y, x) == static_cast<std::uint8_t>(LandCover::kBuildings)) continue;
        for (int t = 1; t <= march; ++t) {
          const int sx = static_cast<int>(std::lround(x + t * sun_dx));
          const int sy = static_cast<int>(std::lround(y + t * sun_dy));
          if (sx < 0 || sy < 0 || sx >= size || sy >= size) break;
          if (height[sy * size + sx] * kHeightToPixels > t * rise) {
            scene.shadow[y * size + x] = 1;
            break;
          }
        }
      }
  }

  // Texture.
  std::normal_distribution<float> noise(0.0f, 1.0f);
  scene.image = torch::empty({3, size, size}, torch::kFloat32);
  auto img = scene.image.accessor<float, 3>();
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int ci = (y / kCell) * grid + (x / kCell);
      Rgb base{};
      float sigma = 0.03f;
      switch (static_cast<LandCover>(cell[ci])) {
        case LandCover::kWater:
          base = {0.10f, 0.20f, 0.35f};
          sigma = 0.015f;
          break;
        case LandCover::kRoad:
          base = {0.40f, 0.40f, 0.42f};
          sigma = 0.025f;
          break;
        case LandCover::kBuildings:
        case LandCover::kImpervious:
          base = object_tint[cell_object[ci]];
          sigma = 0.035f;
          break;
        case LandCover::kFarmland:
          base = (y / 2) % 2 == 0 ? Rgb{0.45f, 0.55f, 0.25f} : Rgb{0.40f, 0.50f, 0.22f};
          break;
        case LandCover::kForest:
          base = {0.12f, 0.33f, 0.12f};
          sigma = 0.05f;
          break;
        case LandCover::kBareLand:
          base = {0.60f, 0.50f, 0.38f};
          sigma = 0.04f;
          break;
      }
      const float shade = scene.shadow[y * size + x] ? kShadowFactor : 1.0f;
      for (int k = 0; k < 3; ++k)
        img[k][y][x] = std::clamp((base[k] + sigma * noise(rng)) * shade, 0.0f, 1.0f);
    }
  return scene;
}

TileGrid TileGrid::for_count(std::int64_t count) {
  if (count <= 0) throw InputError("tile count must be positive");
  TileGrid g;
  g.cols = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  g.rows = (count + g.cols - 1) / g.cols;
  for (std::int64_t k = 0; k < count; ++k) {
    std::ostringstream id;
    id << "tile_r" << (k / g.cols) << "_c" << (k % g.cols);
    g.ids.push_back(id.str());
  }
  return g;
}

std::array<std::int64_t, 3> split_counts(std::int64_t n, const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw InputError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("split ratios must sum to 1");
  if (n < 3) throw InputError("need at least 3 tiles for a three-way split");

  std::array<std::int64_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::int64_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::int64_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++counts[order[k]];
  for (int i = 0; i < 3; ++i) {
    if (counts[i] == 0) {
      auto largest = std::max_element(counts.begin(), counts.end());
      --*largest;
      counts[i] = 1;
    }
  }
  return counts;
}

SplitSets split_spatial(const TileGrid& grid, const std::array<double, 3>& ratios, std::uint64_t seed) {
  const auto n = static_cast<std::int64_t>(grid.ids.size());
  const auto counts = split_counts(n, ratios);

  // Traversals: 0/1 column-major (left->right / right->left), 2/3 row-major (top / bottom).
  const int traversal = static_cast<int>(splitmix64(seed) % 4);
  std::vector<std::int64_t> order;
  order.reserve(n);
  auto push = [&](std::int64_t r, std::int64_t c) {
    const auto k = r * grid.cols + c;
    if (k < n) order.push_back(k);
  };
  if (traversal < 2) {
    for (std::int64_t i = 0; i < grid.cols; ++i) {
      const auto c = traversal == 0 ? i : grid.cols - 1 - i;
      for (std::int64_t r = 0; r < grid.rows; ++r) push(r, c);
    }
  } else {
    for (std::int64_t i = 0; i < grid.rows; ++i) {
      const auto r = traversal == 2 ? i : grid.rows - 1 - i;
      for (std::int64_t c = 0; c < grid.cols; ++c) push(r, c);
    }
  }

  SplitSets s;
  std::int64_t pos = 0;
  for (int b = 0; b < 3; ++b) {
    auto& dst = b == 0 ? s.train : (b == 1 ? s.val : s.test);
    for (std::int64_t k = 0; k < counts[b]; ++k) dst.push_back(grid.ids[order[pos++]]);
  }
  return s;
}

Sample load_sample(const std::filesystem::path& image_path, const std::filesystem::path& mask_path,
                   const std::optional<std::filesystem::path>& depth_path, bool require_depth) {
  Sample s;
  s.tile_id = image_path.stem().string();
  s.image = read_image_tile(image_path);
  s.mask = read_mask_png(mask_path);
  if (s.mask.height != s.image.size(1) || s.mask.width != s.image.size(2))
    throw ShapeMismatchError("mask " + mask_path.string() + " does not match its image");
  ClassSchema::land_cover().validate(s.mask);

  if (depth_path && std::filesystem::is_regular_file(*depth_path)) {
    auto d = read_depth_png(*depth_path);
    if (d.size(0) != s.mask.height || d.size(1) != s.mask.width)
      throw ShapeMismatchError("depth " + depth_path->string() + " does not match its image");
    s.depth = normalize_depth(d);
  } else if (require_depth) {
    throw MissingLabelError("missing depth pseudo-label for tile '" + s.tile_id + "'");
  }
  return s;
}

void write_split_manifest(const std::filesystem::path& path, const SplitSets& splits) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw UnreadableFileError("cannot write " + path.string());
  for (const auto& id : splits.train) os << id << "\ttrain\n";
  for (const auto& id : splits.val) os << id << "\tval\n";
  for (const auto& id : splits.test) os << id << "\ttest\n";
}

std::vector<std::string> read_split(const std::filesystem::path& manifest, std::string_view split) {
  if (split != "train" && split != "val" && split != "test")
    throw InputError("unknown split '" + std::string(split) + "'");
  std::ifstream is(manifest);
  if (!is) throw UnreadableFileError("cannot read split manifest " + manifest.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw UnreadableFileError("malformed manifest line: " + line);
    if (std::string_view(line).substr(tab + 1) == split) ids.push_back(line.substr(0, tab));
  }
  return ids;
}

std::vector<Sample> load_split(const DatasetLayout& layout, std::string_view split, bool require_depth) {
  std::vector<Sample> out;
  for (const auto& id : read_split(layout.manifest(), split)) {
    auto s = load_sample(layout.image(id), layout.mask(id), layout.depth(id), require_depth);
    s.tile_id = id;
    out.push_back(std::move(s));
  }
  return out;
}

torch::Tensor stack_images(const std::vector<const Sample*>& batch) {
  std::vector<torch::Tensor> xs;
  for (const auto* s : batch) xs.push_back(s->image);
  return torch::stack(xs);
}

torch::Tensor stack_labels(const std::vector<const Sample*>& batch) {
  std::vector<torch::Tensor> ys;
  for (const auto* s : batch) {
    auto t = torch::from_blob(const_cast<std::uint8_t*>(s->mask.classes.data()),
                              {s->mask.height, s->mask.width}, torch::kUInt8);
    ys.push_back(t.to(torch::kLong));
  }
  return torch::stack(ys);
}

SceneSpec scene_spec_for_tile(const SynthOptions& options, std::int64_t index) {
  const auto seed = splitmix64(options.seed * 0x100000001b3ull + static_cast<std::uint64_t>(index));
  SceneSpec spec = options.shadow_stress ? SceneSpec::shadow_stress(seed, options.size) : SceneSpec{};
  spec.seed = seed;
  spec.size = options.size;
  return spec;
}

std::vector<Sample> SyntheticSet::subset(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, const Sample*> by_id;
  for (const auto& s : samples) by_id[s.tile_id] = &s;
  std::vector<Sample> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw InputError("unknown tile id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

SyntheticSet synthesize_in_memory(const SynthOptions& options) {
  const auto grid = TileGrid::for_count(options.tiles);
  SyntheticSet set;
  for (std::int64_t k = 0; k < options.tiles; ++k) {
    auto scene = generate_scene(scene_spec_for_tile(options, k));
    Sample s;
    s.tile_id = grid.ids[k];
    s.image = scene.image;
    s.mask = std::move(scene.mask);
    s.depth = normalize_depth(scene.elevation);
    set.oracle.add(s.tile_id, scene.elevation);
    set.samples.push_back(std::move(s));
  }
  set.splits = split_spatial(grid, kReferenceSplitRatios, options.seed);
  return set;
}

SplitSets synthesize_dataset(const std::filesystem::path& root, const SynthOptions& options) {
  if (options.size <= 0 || options.size % 32 != 0)
    throw InputError("tile size must be a positive multiple of 32");
  const DatasetLayout layout{root};
  std::error_code ec;
  for (const char* sub : {"images", "masks", "depth"}) {
    std::filesystem::create_directories(root / sub, ec);
    if (ec) throw UnreadableFileError("cannot create " + (root / sub).string() + ": " + ec.message());
  }
  const auto set = synthesize_in_memory(options);
  for (const auto& s : set.samples) {
    write_image_tile(layout.image(s.tile_id), s.image);
    write_mask_png(layout.mask(s.tile_id), s.mask);
    write_depth_png(layout.depth(s.tile_id), *s.depth);
  }
  write_split_manifest(layout.manifest(), set.splits);
  return set.splits;
}

}  // namespace depthseg
