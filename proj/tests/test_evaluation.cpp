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

#include <algorithm>
#include <cmath>
#include <random>

#include "stflow/evaluation.hpp"

using namespace stflow;

TEST(AngularError, ClosedForms) {
  EXPECT_EQ(angular_error(0, 0, 0, 0), 0.0);
  EXPECT_NEAR(angular_error(1, 0, 0, 1), 60.0, 1e-12);
  EXPECT_NEAR(angular_error(3, 4, 3, 4), 0.0, 1e-9);
  EXPECT_FALSE(std::isnan(angular_error(1e-8, 3, 1e-8, 3)));
}

TEST(AngularError, MatchesClampedArccos) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    const double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
    const double cosv = (a * c + b * e + 1) / (std::sqrt(a * a + b * b + 1) * std::sqrt(c * c + e * e + 1));
    EXPECT_NEAR(angular_error(a, b, c, e), std::acos(std::clamp(cosv, -1.0, 1.0)) * 180 / M_PI, 1e-5);
  }
}

TEST(AngularError, SymmetricAndBounded) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    const double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
    const double ae = angular_error(a, b, c, e);
    EXPECT_EQ(ae, angular_error(c, e, a, b));
    EXPECT_GE(ae, 0.0);
    EXPECT_LE(ae, 180.0);
  }
}

TEST(EndpointError, ClosedForms) {
  EXPECT_EQ(endpoint_error(3, 4, 0, 0), 5.0);
  EXPECT_EQ(endpoint_error(2, -1, 2, -1), 0.0);
  EXPECT_NEAR(endpoint_error(1, 1, -1, -1), 2 * std::sqrt(2.0), 1e-15);
}

TEST(EndpointError, SymmetryAndTriangleInequality) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const double p[6] = {d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)};
    EXPECT_EQ(endpoint_error(p[0], p[1], p[2], p[3]), endpoint_error(p[2], p[3], p[0], p[1]));
    EXPECT_LE(endpoint_error(p[0], p[1], p[4], p[5]),
              endpoint_error(p[0], p[1], p[2], p[3]) + endpoint_error(p[2], p[3], p[4], p[5]) + 1e-12);
  }
}

TEST(EvaluateField, IdenticalFieldsScoreZero) {
  FlowField f(6, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) f.set(x, y, x - 2.5, y * 0.5);
  const EvalReport r = evaluate_field(f, f);
  EXPECT_EQ(r.mean_ae, 0.0);
  EXPECT_EQ(r.mean_ee, 0.0);
  EXPECT_EQ(r.pixel_count, 30u);
}

TEST(EvaluateField, HalfAndHalfMeanOne) {
  FlowField est(4, 4), gt(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) est.set(x, y, x < 2 ? 0.0 : 2.0, 0.0);
  const EvalReport r = evaluate_field(est, gt);
  EXPECT_DOUBLE_EQ(r.mean_ee, 1.0);
}

TEST(EvaluateField, OnlyJointlyValidPixelsCount) {
  FlowField est(4, 1), gt(4, 1);
  est.set(0, 0, 1, 0);
  est.set(1, 0, 100, 0);
  est.set(2, 0, 1, 0);
  est.invalidate(1, 0);
  gt.invalidate(2, 0);
  const EvalReport r = evaluate_field(est, gt);
  EXPECT_EQ(r.pixel_count, 2u);  // pixels 0 and 3
  EXPECT_DOUBLE_EQ(r.mean_ee, 0.5);
}

TEST(EvaluateField, ShrinkingMaskOnlyChangesAggregation) {
  FlowField est(3, 1), gt(3, 1);
  est.set(0, 0, 1, 0);
  est.set(1, 0, 2, 0);
  est.set(2, 0, 4, 0);
  const EvalReport full = evaluate_field(est, gt);
  EXPECT_DOUBLE_EQ(full.mean_ee, 7.0 / 3.0);
  est.invalidate(2, 0);
  EXPECT_DOUBLE_EQ(evaluate_field(est, gt).mean_ee, 1.5);
}

TEST(EvaluateField, PerPatchBreakdown) {
  FlowField est(4, 2), gt(4, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 2; x < 4; ++x) est.set(x, y, 0, 3);
  const EvalReport r = evaluate_field(est, gt, {{0, 0, 2, 2}, {2, 0, 2, 2}});
  ASSERT_EQ(r.per_patch.size(), 2u);
  EXPECT_EQ(r.per_patch[0].ee, 0.0);
  EXPECT_EQ(r.per_patch[1].ee, 3.0);
  EXPECT_EQ(r.per_patch[1].pixels, 4u);
  EXPECT_DOUBLE_EQ(r.mean_ee, 1.5);
}

TEST(EvaluateField, ErrorPaths) {
  EXPECT_THROW(evaluate_field(FlowField(3, 3), FlowField(3, 4)), Error);
  FlowField gt(2, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) gt.invalidate(x, y);
  EXPECT_THROW(evaluate_field(FlowField(2, 2), gt), Error);
}
