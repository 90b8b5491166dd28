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

#include "stflow/serialize.hpp"
#include "test_util.hpp"

using namespace stflow;

TEST(Serialize, GgdFitFields) {
  const json j = to_json(GgdFit{1.5, 2.0, 0.7});
  EXPECT_EQ(j["alpha"], 1.5);
  EXPECT_EQ(j["variance"], 2.0);
  EXPECT_EQ(j["beta"], 0.7);
}

TEST(Serialize, TrajectoryRecordsSeedAndAlgorithm) {
  const json j = to_json(random_trajectory(3, 4, 1, 3, 77, 5));
  EXPECT_EQ(j["kind"], "random");
  EXPECT_EQ(j["seed"], 77);
  EXPECT_EQ(j["offsets"].size(), 3u);
  EXPECT_EQ(j["random_algorithm"], std::string(kRandomTrajectoryAlgorithm));
}

TEST(Serialize, EvalCsvRow) {
  EvalReport r;
  r.mean_ae = 23.7149;
  r.mean_ee = 1.5678;
  EXPECT_EQ(eval_csv_row(81, 12, r), "81,12,23.714900,1.567800\n");
  EXPECT_EQ(kEvalCsvHeader, "N,range,AE,EE\n");
}

TEST(Serialize, VolumeRawRoundTrip) {
  testutil::TempDir dir("raw");
  Volume<double> v(3, 2, 2);
  for (std::size_t i = 0; i < v.size(); ++i) v.values()[i] = 0.25 * static_cast<double>(i) - 1.0;
  write_volume_raw(v, dir / "v.raw", {{"kind", "STDN"}});
  const json side = read_json(dir / "v.json");
  EXPECT_EQ(side["width"], 3);
  EXPECT_EQ(side["depth"], 2);
  EXPECT_EQ(side["kind"], "STDN");
  EXPECT_EQ(read_volume_raw(dir / "v.raw", 3, 2, 2), v);
  EXPECT_THROW(read_volume_raw(dir / "v.raw", 3, 3, 2), Error);
}
