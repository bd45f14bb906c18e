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
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "depthseg/errors.hpp"
#include "depthseg/image_io.hpp"
#include "../support.hpp"

namespace depthseg {
namespace {

using testing::TempDir;

std::int64_t count_class(const LabelMask& m, LandCover c) {
  return std::count(m.classes.begin(), m.classes.end(), static_cast<std::uint8_t>(c));
}

TEST(Scene, DeterministicInSeed) {
  SceneSpec spec;
  spec.seed = 17;
  auto a = generate_scene(spec), b = generate_scene(spec);
  EXPECT_TRUE(torch::equal(a.image, b.image));
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_TRUE(torch::equal(a.height, b.height));
  EXPECT_TRUE(torch::equal(a.elevation, b.elevation));
  EXPECT_EQ(a.shadow, b.shadow);
  spec.seed = 18;
  EXPECT_FALSE(torch::equal(generate_scene(spec).image, a.image));
}

TEST(Scene, NoBuildingsMeansNoShadowsOrHeight) {
  for (std::uint64_t seed : {1, 2, 3}) {
    SceneSpec spec;
    spec.seed = seed;
    spec.building_density = 0.0;
    auto s = generate_scene(spec);
    EXPECT_EQ(count_class(s.mask, LandCover::kBuildings), 0);
    EXPECT_EQ(std::count(s.shadow.begin(), s.shadow.end(), 1), 0);
    EXPECT_EQ(s.height.abs().max().item<float>(), 0.0f);
  }
}

TEST(Scene, ContractsOnFields) {
  SceneSpec spec;
  spec.seed = 4;
  spec.size = 96;
  auto s = generate_scene(spec);
  EXPECT_EQ(s.image.sizes().vec(), (std::vector<std::int64_t>{3, 96, 96}));
  EXPECT_GE(s.image.min().item<float>(), 0.0f);
  EXPECT_LE(s.image.max().item<float>(), 1.0f);
  EXPECT_NO_THROW(ClassSchema::land_cover().validate(s.mask));
  // Roofs stand on land; water is the lowest surface.
  auto e = s.elevation.accessor<float, 2>();
  auto h = s.height.accessor<float, 2>();
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      EXPECT_EQ(h[y][x] > 0.0f, s.mask.at(y, x) == static_cast<std::uint8_t>(LandCover::kBuildings));
      EXPECT_GE(e[y][x], 0.0f);
    }
  // Shadows only fall outside buildings.
  for (std::size_t i = 0; i < s.shadow.size(); ++i)
    if (s.shadow[i]) EXPECT_NE(s.mask.classes[i], static_cast<std::uint8_t>(LandCover::kBuildings));
  // Labels sit on an 8-pixel grid.
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) EXPECT_EQ(s.mask.at(y, x), s.mask.at(y - y % 8, x - x % 8));
}

TEST(Scene, ShadowStressRaisesBuildingsAndShadows) {
  std::int64_t plain_b = 0, plain_s = 0, stress_b = 0, stress_s = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    SceneSpec plain;
    plain.seed = seed;
    auto a = generate_scene(plain);
    auto b = generate_scene(SceneSpec::shadow_stress(seed, 64));
    plain_b += count_class(a.mask, LandCover::kBuildings);
    stress_b += count_class(b.mask, LandCover::kBuildings);
    plain_s += std::count(a.shadow.begin(), a.shadow.end(), 1);
    stress_s += std::count(b.shadow.begin(), b.shadow.end(), 1);
  }
  EXPECT_GT(stress_b, plain_b);
  EXPECT_GT(stress_s, plain_s);
  const auto stress = SceneSpec::shadow_stress(0, 64);
  EXPECT_GT(stress.building_density, SceneSpec{}.building_density);
  EXPECT_LT(stress.sun_elevation_deg, SceneSpec{}.sun_elevation_deg);
}

TEST(Scene, RejectsInvalidSpec) {
  SceneSpec spec;
  spec.size = 50;
  EXPECT_THROW(generate_scene(spec), InputError);
  spec.size = 64;
  spec.building_density = -0.1;
  EXPECT_THROW(generate_scene(spec), InputError);
}

TEST(Split, ReferenceProportionsOnHundredTiles) {
  EXPECT_EQ(split_counts(100, kReferenceSplitRatios), (std::array<std::int64_t, 3>{46, 27, 27}));
  // Proportions read from the reference dataset's pair counts.
  const double total = 7047.0 + 4209.0 + 4071.0;
  EXPECT_NEAR(7047.0 / total, 0.46, 0.005);
  EXPECT_NEAR(4209.0 / total, 0.27, 0.005);
  EXPECT_NEAR(4071.0 / total, 0.27, 0.005);
  auto s = split_spatial(TileGrid::for_count(100), kReferenceSplitRatios, 0);
  EXPECT_EQ(s.train.size(), 46u);
  EXPECT_EQ(s.val.size(), 27u);
  EXPECT_EQ(s.test.size(), 27u);
}

TEST(Split, SkewedRatiosStillGiveOneTilePerBlock) {
  EXPECT_EQ(split_counts(3, {0.98, 0.01, 0.01}), (std::array<std::int64_t, 3>{1, 1, 1}));
  EXPECT_THROW(split_counts(2, kReferenceSplitRatios), InputError);
  EXPECT_THROW(split_counts(10, {0.5, 0.5, 0.0}), InputError);
  EXPECT_THROW(split_counts(10, {0.5, 0.3, 0.3}), InputError);
}

TEST(Split, PartitionProperty) {
  for (std::int64_t n : {3, 7, 16, 30, 64, 101}) {
    for (std::uint64_t seed : {0, 1, 2, 3}) {
      const auto grid = TileGrid::for_count(n);
      const auto s = split_spatial(grid, kReferenceSplitRatios, seed);
      std::set<std::string> seen;
      for (const auto* part : {&s.train, &s.val, &s.test}) {
        EXPECT_FALSE(part->empty());
        for (const auto& id : *part) EXPECT_TRUE(seen.insert(id).second) << id;
      }
      EXPECT_EQ(seen, std::set<std::string>(grid.ids.begin(), grid.ids.end()));
      const auto counts = split_counts(n, kReferenceSplitRatios);
      EXPECT_EQ(static_cast<std::int64_t>(s.train.size()), counts[0]);
    }
  }
}

TEST(Split, BlocksAreSpatiallyContiguous) {
  // Every split's tiles form a 4-connected region of the grid.
  const auto grid = TileGrid::for_count(64);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto s = split_spatial(grid, kReferenceSplitRatios, seed);
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      std::set<std::pair<std::int64_t, std::int64_t>> cells;
      for (const auto& id : *part) {
        const auto k = std::find(grid.ids.begin(), grid.ids.end(), id) - grid.ids.begin();
        cells.insert({k / grid.cols, k % grid.cols});
      }
      std::set<std::pair<std::int64_t, std::int64_t>> reached{*cells.begin()};
      std::vector<std::pair<std::int64_t, std::int64_t>> stack{*cells.begin()};
      while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        for (auto [dr, dc] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
          std::pair<std::int64_t, std::int64_t> nb{r + dr, c + dc};
          if (cells.contains(nb) && reached.insert(nb).second) stack.push_back(nb);
        }
      }
      EXPECT_EQ(reached.size(), cells.size());
    }
  }
}

TEST(Schema, RenderDecodeRoundTrip) {
  const auto& schema = ClassSchema::land_cover();
  LabelMask m(4, 5);
  for (std::int64_t i = 0; i < 20; ++i) m.classes[i] = static_cast<std::uint8_t>(i % 7);
  m.classes[3] = kIgnoreLabel;
  EXPECT_EQ(schema.decode(schema.render(m)), m);
  LabelMask bad(1, 1, 9);
  EXPECT_THROW(schema.validate(bad), IllegalClassError);
  auto rgb = schema.render(m);
  rgb.samples[0] = 1;
  rgb.samples[1] = 2;
  rgb.samples[2] = 3;
  EXPECT_THROW(schema.decode(rgb), IllegalClassError);
}

class SampleFiles : public ::testing::Test {
 protected:
  TempDir dir{"sample"};
  void SetUp() override {
    SceneSpec spec;
    spec.seed = 2;
    scene_ = generate_scene(spec);
    write_image_tile(dir / "t.png", scene_.image);
    write_mask_png(dir / "m.png", scene_.mask);
    write_depth_png(dir / "t_depth.png", normalize_depth(scene_.elevation));
  }
  Scene scene_;
};

TEST_F(SampleFiles, LoadsValidTriplet) {
  auto s = load_sample(dir / "t.png", dir / "m.png", dir / "t_depth.png", true);
  EXPECT_EQ(s.tile_id, "t");
  EXPECT_EQ(s.image.sizes().vec(), (std::vector<std::int64_t>{3, 64, 64}));
  EXPECT_LE((s.image - scene_.image).abs().max().item<float>(), 0.5f / 255.0f + 1e-6f);
  EXPECT_EQ(s.mask, scene_.mask);
  ASSERT_TRUE(s.depth.has_value());
  EXPECT_GE(s.depth->min().item<float>(), 0.0f);
  EXPECT_LE(s.depth->max().item<float>(), 1.0f);
}

TEST_F(SampleFiles, ReportsDistinctErrors) {
  LabelMask bad = scene_.mask;
  bad.at(0, 0) = 9;
  write_mask_png(dir / "bad.png", bad);
  EXPECT_THROW(load_sample(dir / "t.png", dir / "bad.png", std::nullopt, false), IllegalClassError);
  EXPECT_THROW(load_sample(dir / "t.png", dir / "m.png", dir / "none.png", true), MissingLabelError);
  EXPECT_NO_THROW(load_sample(dir / "t.png", dir / "m.png", dir / "none.png", false));
  write_mask_png(dir / "small.png", LabelMask(32, 32));
  EXPECT_THROW(load_sample(dir / "t.png", dir / "small.png", std::nullopt, false), ShapeMismatchError);
  EXPECT_THROW(load_sample(dir / "missing.png", dir / "m.png", std::nullopt, false), UnreadableFileError);
  std::ofstream(dir / "junk.png") << "not a png";
  EXPECT_THROW(load_sample(dir / "junk.png", dir / "m.png", std::nullopt, false), UnreadableFileError);
}

TEST(ImageIo, DepthPngQuantization) {
  TempDir dir("png");
  auto d = torch::tensor({0.0f, 1.0f, 0.5f, 0.25f}).view({2, 2});
  write_depth_png(dir / "d.png", d);
  auto raw = read_png(dir / "d.png");
  EXPECT_EQ(raw.bit_depth, 16);
  EXPECT_EQ(raw.channels, 1);
  EXPECT_EQ(raw.samples[0], 0);
  EXPECT_EQ(raw.samples[1], 65535);
  EXPECT_LE((read_depth_png(dir / "d.png") - d).abs().max().item<float>(), 0.5f / 65535.0f + 1e-7f);
}

TEST(Synthesize, WritesLayoutAndManifest) {
  TempDir dir("synth");
  SynthOptions o;
  o.tiles = 16;
  o.size = 64;
  o.seed = 1;
  const auto splits = synthesize_dataset(dir.path(), o);
  const DatasetLayout layout{dir.path()};
  std::int64_t n = 0;
  for (const auto* part : {&splits.train, &splits.val, &splits.test})
    for (const auto& id : *part) {
      EXPECT_TRUE(std::filesystem::is_regular_file(layout.image(id)));
      EXPECT_TRUE(std::filesystem::is_regular_file(layout.mask(id)));
      EXPECT_TRUE(std::filesystem::is_regular_file(layout.depth(id)));
      ++n;
    }
  EXPECT_EQ(n, 16);
  EXPECT_EQ(read_split(layout.manifest(), "train"), splits.train);
  EXPECT_EQ(read_split(layout.manifest(), "test"), splits.test);
  EXPECT_THROW(read_split(layout.manifest(), "holdout"), InputError);
  auto train = load_split(layout, "train", true);
  EXPECT_EQ(train.size(), splits.train.size());
  o.size = 50;
  EXPECT_THROW(synthesize_dataset(dir / "x", o), InputError);
}

TEST(Synthesize, InMemoryMatchesOracle) {
  SynthOptions o;
  o.tiles = 4;
  auto set = synthesize_in_memory(o);
  ASSERT_EQ(set.samples.size(), 4u);
  for (const auto& s : set.samples) {
    auto label = set.oracle.lookup(s.tile_id);
    EXPECT_TRUE(torch::equal(normalize_depth(label.depth), *s.depth));
  }
  EXPECT_THROW(set.subset({"nope"}), InputError);
}

TEST(Batching, StacksImagesAndLabels) {
  SynthOptions o;
  o.tiles = 3;
  auto set = synthesize_in_memory(o);
  std::vector<const Sample*> batch{&set.samples[0], &set.samples[2]};
  auto x = stack_images(batch);
  auto y = stack_labels(batch);
  EXPECT_EQ(x.sizes().vec(), (std::vector<std::int64_t>{2, 3, 64, 64}));
  EXPECT_EQ(y.dtype(), torch::kLong);
  EXPECT_EQ(y[1][5][7].item<int>(), set.samples[2].mask.at(5, 7));
}

}  // namespace
}  // namespace depthseg
