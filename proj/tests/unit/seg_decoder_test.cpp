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

#include "depthseg/seg_decoder.hpp"

#include <gtest/gtest.h>

#include "depthseg/errors.hpp"
#include "depthseg/model.hpp"
#include "depthseg/prompter.hpp"
#include "../support.hpp"

namespace depthseg {
namespace {

using testing::random_images;
using testing::random_pyramid;
using testing::tiny;

PromptPyramid random_prompts(const std::array<int, 4>& ch, std::int64_t n, std::int64_t h, std::int64_t w) {
  PromptPyramid p;
  p.prompts = random_pyramid(ch, n, h, w).levels;
  return p;
}

TEST(SegDecoder, LogitShape) {
  torch::manual_seed(0);
  const auto ch = tiny().reassembly_channels;
  SegDecoder d(ch);
  auto logits = decode_semantics(d, random_pyramid(ch, 2, 64, 64), random_prompts(ch, 2, 64, 64));
  EXPECT_EQ(logits.sizes().vec(), (std::vector<std::int64_t>{2, 7, 64, 64}));
  auto bare = decode_semantics(d, random_pyramid(ch, 1, 96, 32), std::nullopt);
  EXPECT_EQ(bare.sizes().vec(), (std::vector<std::int64_t>{1, 7, 96, 32}));
}

TEST(SegDecoder, ZeroedPromptColumnsMatchPromptFreePath) {
  torch::manual_seed(0);
  const auto ch = tiny().reassembly_channels;
  SegDecoder d(ch);
  d->eval();
  {
    torch::NoGradGuard g;
    for (int i = 0; i < 4; ++i) d->fusion(i)->prompt_columns()->weight.zero_();
  }
  auto f = random_pyramid(ch, 2, 64, 64);
  auto with_zero_path = decode_semantics(d, f, random_prompts(ch, 2, 64, 64));
  auto without = decode_semantics(d, f, std::nullopt);
  EXPECT_TRUE(torch::equal(with_zero_path, without));
}

TEST(SegDecoder, FreshDecoderIgnoresPrompts) {
  torch::manual_seed(0);
  const auto ch = tiny().reassembly_channels;
  SegDecoder d(ch);
  d->eval();
  auto f = random_pyramid(ch, 1, 64, 64);
  auto a = decode_semantics(d, f, random_prompts(ch, 1, 64, 64));
  auto b = decode_semantics(d, f, std::nullopt);
  EXPECT_TRUE(torch::equal(a, b));
}

TEST(SegDecoder, PromptsChangeLogits) {
  torch::manual_seed(0);
  const auto ch = tiny().reassembly_channels;
  SegDecoder d(ch);
  d->eval();
  {
    torch::NoGradGuard g;
    for (int i = 0; i < kPyramidLevels; ++i) d->fusion(i)->prompt_columns()->weight.normal_(0.0, 0.1);
  }
  auto f = random_pyramid(ch, 1, 64, 64);
  auto a = decode_semantics(d, f, random_prompts(ch, 1, 64, 64));
  auto b = decode_semantics(d, f, std::nullopt);
  EXPECT_GT((a - b).abs().max().item<float>(), 0.0f);
}

TEST(SegDecoder, ClassifyThenUpsampleEqualsUpsampleThenClassify) {
  torch::manual_seed(4);
  auto x = torch::randn({1, 16, 8, 8}, torch::kFloat64);
  auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(16, 7, 1));
  conv->to(torch::kFloat64);
  namespace F = torch::nn::functional;
  auto up = [](const torch::Tensor& t) {
    return F::interpolate(t, F::InterpolateFuncOptions().scale_factor(std::vector<double>{4.0, 4.0}).mode(torch::kBilinear).align_corners(false));
  };
  EXPECT_TRUE(torch::allclose(up(conv(x)), conv(up(x)), 1e-12, 1e-12));
}

TEST(SegDecoder, RejectsMisalignedInputs) {
  torch::manual_seed(0);
  const auto ch = tiny().reassembly_channels;
  SegDecoder d(ch);
  auto f = random_pyramid(ch, 1, 64, 64);
  auto wrong = random_prompts(ch, 1, 32, 32);
  EXPECT_THROW(decode_semantics(d, f, wrong), ContractError);
  auto batch = random_prompts(ch, 2, 64, 64);
  EXPECT_THROW(decode_semantics(d, f, batch), ContractError);
  f.levels[3] = torch::randn({1, 128, 2, 2});
  EXPECT_THROW(decode_semantics(d, f, std::nullopt), ContractError);
}

TEST(PredictMask, TieBreakAndArgmax) {
  auto zeros = torch::zeros({1, 7, 4, 4});
  EXPECT_EQ(predict_mask(zeros).max().item<int>(), 0);
  for (int k = 0; k < 7; ++k) {
    auto onehot = torch::zeros({2, 7, 3, 5});
    onehot.select(1, k).fill_(1000.0f);
    auto m = predict_mask(onehot);
    EXPECT_EQ(m.dtype(), torch::kUInt8);
    EXPECT_TRUE(torch::equal(m, torch::full({2, 3, 5}, k, torch::kUInt8)));
  }
  torch::manual_seed(9);
  auto r = torch::randn({2, 7, 8, 8});
  EXPECT_TRUE(torch::equal(predict_mask(r), predict_mask(r)));
  EXPECT_THROW(predict_mask(torch::zeros({7, 4, 4})), InputError);
}

TEST(PredictMask, ToLabelMasks) {
  auto m = torch::arange(2 * 3 * 4).remainder(7).view({2, 3, 4}).to(torch::kUInt8);
  auto masks = to_label_masks(m);
  ASSERT_EQ(masks.size(), 2u);
  EXPECT_EQ(masks[1].height, 3);
  EXPECT_EQ(masks[1].width, 4);
  EXPECT_EQ(masks[1].at(2, 3), m[1][2][3].item<int>());
}

TEST(Model, TogglesControlPathways) {
  torch::manual_seed(0);
  DepthSegModel m(tiny(), ModelToggles{true, true});
  m->eval();
  auto x = random_images(1, 64, 64);
  auto full = m->forward(x);
  EXPECT_TRUE(full.depth.has_value());
  EXPECT_TRUE(full.prompts.has_value());
  EXPECT_EQ(full.features.source, PyramidSource::kAdapter);
  m->set_toggles(ModelToggles{false, false});
  auto bare = m->forward(x);
  EXPECT_FALSE(bare.depth.has_value());
  EXPECT_FALSE(bare.prompts.has_value());
  EXPECT_EQ(bare.features.source, PyramidSource::kEncoder);
  EXPECT_EQ(bare.logits.sizes().vec(), (std::vector<std::int64_t>{1, 7, 64, 64}));
}

TEST(Model, InitializationIndependentOfToggles) {
  torch::manual_seed(5);
  DepthSegModel a(tiny(), ModelToggles{true, true});
  torch::manual_seed(5);
  DepthSegModel b(tiny(), ModelToggles{false, false});
  auto pa = a->named_parameters(), pb = b->named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (const auto& item : pa) EXPECT_TRUE(torch::equal(item.value(), pb[item.key()])) << item.key();
}

}  // namespace
}  // namespace depthseg
