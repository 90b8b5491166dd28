// Copyright (c) the stflow authors
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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "stflow/evaluation.hpp"
#include "stflow/flow_regularity.hpp"
#include "stflow/synthetic.hpp"

using namespace stflow;

namespace {

FrameSequence translating(int w, int h, int frames, int dx, int dy, double noise, std::uint64_t seed) {
  const Image tex =
      synthetic::blob_texture(w + std::abs(dx) * frames, h + std::abs(dy) * frames, seed, 6, 5, 100, 3);
  return synthetic::translating_sequence(tex, {w, h, frames, dx, dy, noise, seed + 1000, false});
}

// Brute-force block matcher: arg-min of the mean absolute difference over
// the same displacement window, ties to smaller |d|^2 then (x, y).
Offset sad_argmin(const FrameSequence& seq, const Rect& p, int range) {
  Offset best{};
  double best_v = std::numeric_limits<double>::infinity();
  for (int dy = -range; dy <= range; ++dy)
    for (int dx = -range; dx <= range; ++dx) {
      double s = 0;
      for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) s += std::fabs(seq[0](p.x + x, p.y + y) - seq[1](p.x + x + dx, p.y + y + dy));
      const auto key = std::make_tuple(s, dx * dx + dy * dy, dx, dy);
      if (key < std::make_tuple(best_v, best.x * best.x + best.y * best.y, best.x, best.y)) {
        best = {dx, dy};
        best_v = s;
      }
    }
  return best;
}

RegularityMap synthetic_map(int range, double fill) {
  RegularityMap m;
  m.range = range;
  m.kld = Grid<double>(2 * range + 1, 2 * range + 1, fill);
  return m;
}

FrameSequence scaled(const FrameSequence& seq, double k) {
  std::vector<Image> frames;
  for (const auto& f : seq.frames()) {
    Image g = f;
    for (double& v : g.values()) v *= k;
    frames.push_back(std::move(g));
  }
  return FrameSequence(std::move(frames));
}

}  // namespace

TEST(DisplacementRange, StandardPatchSizes) {
  const int sizes[] = {51, 61, 71, 81, 91, 101};
  const int ranges[] = {8, 10, 10, 12, 14, 16};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(displacement_range(sizes[i]), ranges[i]) << sizes[i];
  EXPECT_EQ(displacement_range(6), 0);
  EXPECT_EQ(displacement_range(12), 2);
  EXPECT_THROW(displacement_range(5), Error);
}

TEST(RegularityMap, ShapeAndNonNegative) {
  const auto seq = translating(80, 80, 2, 1, 0, 2.0, 1);
  const auto map = regularity_map(seq, {20, 20, 31, 31}, 0, 1, 4);
  EXPECT_EQ(map.side(), 9);
  EXPECT_EQ(map.kld.width(), 9);
  EXPECT_EQ(map.finite_count(), 81u);
  for (double v : map.kld.values()) EXPECT_GE(v, 0.0);
}

TEST(RegularityMap, ArgminMatchesBlockMatching) {
  for (std::uint64_t seed = 11; seed < 15; ++seed) {
    for (double noise : {0.0, 2.0}) {
      const auto seq = translating(110, 110, 2, 2, 1, noise, seed);
      const Rect patch{30, 30, 51, 51};
      const auto map = regularity_map(seq, patch, 0, 1, 8);
      EXPECT_EQ(map.argmin(), (Offset{2, 1})) << "seed " << seed << " noise " << noise;
      EXPECT_EQ(map.argmin(), sad_argmin(seq, patch, 8));
    }
  }
}

TEST(RegularityMap, StaticSceneMinimumAtOrigin) {
  const auto tex = synthetic::blob_texture(90, 90, 4, 6, 5, 100, 3);
  const FrameSequence seq(std::vector<Image>{tex, tex});
  const auto map = regularity_map(seq, {20, 20, 51, 51}, 0, 1, 8);
  EXPECT_EQ(map.argmin(), (Offset{0, 0}));
  EXPECT_EQ(map.at(0, 0), 0.0);
}

TEST(RegularityMap, AlignedBeatsOpposite) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const auto seq = translating(110, 110, 2, 3, -2, 2.0, seed);
    const auto map = regularity_map(seq, {30, 30, 51, 51}, 0, 1, 8);
    EXPECT_LT(map.at(3, -2), map.at(-3, 2));
    EXPECT_LT(map.at(3, -2), map.at(0, 0));
  }
}

TEST(RegularityMap, ClippedOverlapAtBorder) {
  const auto seq = translating(60, 60, 2, 1, 0, 2.0, 5);
  const auto map = regularity_map(seq, {0, 0, 30, 30}, 0, 1, 4);
  EXPECT_TRUE(std::isfinite(map.at(-4, -4)));  // 26x26 overlap remains
  EXPECT_EQ(map.finite_count(), 81u);
}

TEST(RegularityMap, LuminanceScaleWithConstantIsExact) {
  const auto base = scaled(translating(100, 100, 2, 1, 1, 2.0, 6), 0.4);
  const Rect patch{25, 25, 41, 41};
  const auto ref = regularity_map(base, patch, 0, 1, 6);
  for (double k : {0.5, 2.0}) {
    RegularityOptions opt;
    opt.c = presets::kDivisiveC * k;
    const auto map = regularity_map(scaled(base, k), patch, 0, 1, 6, opt);
    for (std::size_t i = 0; i < map.kld.size(); ++i) EXPECT_NEAR(map.kld.values()[i], ref.kld.values()[i], 1e-6);
  }
}

// Residual contrast here is comparable to C, so only the ordering is
// expected to survive a luminance rescale.
TEST(RegularityMap, LuminanceScaleWithFixedConstantIsApproximate) {
  const auto base = scaled(translating(100, 100, 2, 1, 1, 2.0, 6), 0.4);
  const Rect patch{25, 25, 41, 41};
  const auto ref = regularity_map(base, patch, 0, 1, 6);
  for (double k : {0.5, 2.0}) {
    const auto map = regularity_map(scaled(base, k), patch, 0, 1, 6);
    EXPECT_EQ(map.argmin(), ref.argmin());
    for (std::size_t i = 0; i < map.kld.size(); ++i)
      EXPECT_NEAR(map.kld.values()[i], ref.kld.values()[i], 0.05 + 0.3 * ref.kld.values()[i]);
  }
}

TEST(RegularityMap, Deterministic) {
  const auto seq = translating(80, 80, 2, -1, 2, 2.0, 7);
  const auto a = regularity_map(seq, {15, 15, 41, 41}, 0, 1, 6);
  const auto b = regularity_map(seq, {15, 15, 41, 41}, 0, 1, 6);
  EXPECT_EQ(a.kld, b.kld);
}

TEST(RegularityMap, ErrorPaths) {
  const auto seq = translating(60, 60, 2, 1, 0, 0.0, 8);
  EXPECT_THROW(regularity_map(seq, {40, 40, 30, 30}, 0, 1, 4), Error);
  EXPECT_THROW(regularity_map(seq, {0, 0, 30, 30}, 1, 1, 4), Error);
  EXPECT_THROW(regularity_map(seq, {0, 0, 30, 30}, 0, 1, -1), Error);
}

TEST(PatchMotion, SingletonMinimum) {
  auto m = synthetic_map(1, 10.0);  // 9 entries -> rank 1
  m.at(1, -1) = 0.1;
  const auto est = estimate_patch_motion(m);
  EXPECT_EQ(est.set_size, 1u);
  EXPECT_EQ(est.u, 1.0);
  EXPECT_EQ(est.v, -1.0);
}

TEST(PatchMotion, IsolatedMinimumWithSymmetricRunnersUp) {
  auto m = synthetic_map(4, 10.0);  // 81 entries -> rank 5
  m.at(3, -2) = 0.1;
  for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) m.at(3 + dx, -2 + dy) = 0.5;
  const auto est = estimate_patch_motion(m);
  EXPECT_EQ(est.set_size, 5u);
  EXPECT_DOUBLE_EQ(est.u, 3.0);
  EXPECT_DOUBLE_EQ(est.v, -2.0);
}

TEST(PatchMotion, TiesAtThresholdAreAllAveraged) {
  auto m = synthetic_map(1, 10.0);  // 9 entries -> rank ceil(0.45) = 1
  m.at(1, 0) = 0.1;
  m.at(0, 1) = 0.1;
  const auto est = estimate_patch_motion(m);
  EXPECT_EQ(est.set_size, 2u);
  EXPECT_DOUBLE_EQ(est.u, 0.5);
  EXPECT_DOUBLE_EQ(est.v, 0.5);
}

TEST(PatchMotion, WideMapTiesAtTwoAndFour) {
  auto m = synthetic_map(4, 10.0);
  // 81 entries -> 5 lowest; (2,0) and (4,0) tie at the bottom, then three
  // symmetric entries about (3, 0)
  m.at(2, 0) = 0.1;
  m.at(4, 0) = 0.1;
  m.at(3, 1) = 0.2;
  m.at(3, -1) = 0.2;
  m.at(3, 0) = 0.2;
  const auto est = estimate_patch_motion(m);
  EXPECT_EQ(est.set_size, 5u);
  EXPECT_DOUBLE_EQ(est.u, 3.0);
  EXPECT_DOUBLE_EQ(est.v, 0.0);
}

TEST(PatchMotion, UniformMapAveragesToZero) {
  const auto est = estimate_patch_motion(synthetic_map(6, 0.3));
  EXPECT_EQ(est.set_size, 169u);
  EXPECT_EQ(est.u, 0.0);
  EXPECT_EQ(est.v, 0.0);
}

TEST(PatchMotion, ArgminAlwaysInSetAndInfinitiesSkipped) {
  auto m = synthetic_map(3, kInf);
  m.at(-1, 2) = 0.7;
  const auto est = estimate_patch_motion(m);
  EXPECT_EQ(est.set_size, 1u);
  EXPECT_EQ(est.u, -1.0);
  EXPECT_THROW(estimate_patch_motion(synthetic_map(3, kInf)), Error);
}

TEST(FlowField, TilingArithmetic) {
  const FrameSequence seq(std::vector<Image>(2, synthetic::blob_texture(256, 256, 9)));
  const auto tiles = estimate_flow_tiles(seq, 0, 81);
  EXPECT_EQ(tiles.patches.size(), 9u);
  EXPECT_EQ(tiles.range, 12);
  // 3 x 81 = 243 covered; 13-pixel right and bottom margins
  EXPECT_EQ(tiles.field.valid_count(), 243u * 243u);
  EXPECT_TRUE(tiles.field.is_valid(242, 242));
  EXPECT_FALSE(tiles.field.is_valid(243, 0));
  EXPECT_FALSE(tiles.field.is_valid(0, 255));
}

TEST(FlowField, StaticSequenceNearZero) {
  const auto tex = synthetic::blob_texture(102, 102, 10, 6, 5, 100, 3);
  const FrameSequence seq(std::vector<Image>{tex, tex});
  const FlowField f = estimate_flow_field(seq, 0, 51);
  const EvalReport rep = evaluate_field(f, synthetic::constant_flow(102, 102, 0, 0));
  EXPECT_LE(rep.mean_ee, 0.5);
}

TEST(FlowField, TranslationWithinHalfPixel) {
  const auto seq = translating(153, 102, 2, -3, 2, 0.0, 12);
  const FlowField f = estimate_flow_field(seq, 0, 51);
  for (int y = 0; y < 102; ++y)
    for (int x = 0; x < 153; ++x)
      if (f.is_valid(x, y)) {
        ASSERT_LE(endpoint_error(f.u(x, y), f.v(x, y), -3, 2), 0.5) << x << "," << y;
      }
}

TEST(FlowField, FrameSmallerThanTileRejected) {
  const FrameSequence seq(std::vector<Image>(2, Image(40, 40, 5.0)));
  EXPECT_THROW(estimate_flow_field(seq, 0, 51), Error);
}

TEST(FourStep, StaticSceneStaysAtOrigin) {
  const auto tex = synthetic::blob_texture(200, 200, 13, 6, 5, 100, 3);
  const FrameSequence seq(std::vector<Image>(11, tex));
  for (NormKind k : {NormKind::TDN, NormKind::STDN}) {
    const auto r = four_step_trajectory_search(seq, 50, 50, 0, k);
    EXPECT_EQ(r.endpoint, (Offset{0, 0})) << to_string(k);
  }
}

TEST(FourStep, StepKldNonIncreasing) {
  const auto seq = translating(200, 200, 11, -2, 1, 2.0, 14);
  for (NormKind k : {NormKind::TDN, NormKind::STDN}) {
    const auto r = four_step_trajectory_search(seq, 50, 50, 0, k);
    ASSERT_EQ(r.step_kld.size(), 4u);
    for (int s = 1; s < 4; ++s) EXPECT_LE(r.step_kld[s], r.step_kld[s - 1]);
    EXPECT_EQ(r.step_endpoint.back(), r.endpoint);
  }
}

TEST(FourStep, CandidateCountsAndReach) {
  const auto seq = translating(200, 200, 11, 0, 0, 2.0, 15);
  const auto r = four_step_trajectory_search(seq, 50, 50, 0, NormKind::STDN);
  int first = 0;
  for (const auto& c : r.evaluated) {
    first += c.step == 1;
    EXPECT_LE(std::abs(c.endpoint.x), 34);
    EXPECT_LE(std::abs(c.endpoint.y), 34);
  }
  EXPECT_EQ(first, 25);
  EXPECT_LE(r.evaluated.size(), 25u + 3u * 8u);
}

TEST(FourStep, RecoversLargerMotion) {
  // (-3, 2) per frame over 10 frames = (-30, 20), inside the +-34 reach
  const auto seq = translating(200, 200, 11, -3, 2, 2.0, 16);
  const auto r = four_step_trajectory_search(seq, 50, 50, 0, NormKind::STDN);
  EXPECT_LE(endpoint_error(r.endpoint.x / 10.0, r.endpoint.y / 10.0, -3, 2), 1.0);
  EXPECT_EQ(r.trajectory.offsets.back(), r.endpoint);
  EXPECT_EQ(r.trajectory.offsets[0], (Offset{-3, 2}));
}

TEST(FourStep, RejectsBadInputs) {
  const FrameSequence seq(std::vector<Image>(5, Image(200, 200, 1.0)));
  EXPECT_THROW(four_step_trajectory_search(seq, 50, 50, 0, NormKind::STDN), Error);
  const FrameSequence longer(std::vector<Image>(11, Image(200, 200, 1.0)));
  EXPECT_THROW(four_step_trajectory_search(longer, 50, 50, 0, NormKind::SDN), Error);
  EXPECT_THROW(four_step_trajectory_search(longer, 150, 50, 0, NormKind::TDN), Error);
}

TEST(RegularityMapExport, CsvAndImage) {
  auto m = synthetic_map(1, 2.0);
  m.at(0, 0) = 1.0;
  m.at(1, 1) = kInf;
  const std::string csv = regularity_map_csv(m);
  EXPECT_EQ(csv, "2,2,2\n2,1,2\n2,2,inf\n");
  const MapImage img = regularity_map_image(m);
  EXPECT_EQ(img.min, 1.0);
  EXPECT_EQ(img.max, 2.0);
  EXPECT_EQ(img.pixels(1, 1), 0);
  EXPECT_EQ(img.pixels(0, 0), 65535);
  EXPECT_EQ(img.pixels(2, 2), 65535);
}
