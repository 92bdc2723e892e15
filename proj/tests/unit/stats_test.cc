// Copyright 2026 The stb Authors.
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

#include "stb/stats.h"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "stb/error.h"

namespace stb::stats {
namespace {

TEST(StatsTest, NormalQuantileInvertsCdf) {
  for (double p : {0.001, 0.025, 0.3, 0.5, 0.55, 0.975, 0.999}) {
    EXPECT_NEAR(NormalCdf(NormalQuantile(p)), p, 1e-12);
  }
  EXPECT_NEAR(NormalQuantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_THROW(NormalQuantile(0.0), Error);
  EXPECT_THROW(NormalQuantile(1.0), Error);
}

TEST(StatsTest, ChiSquareSurvivalMatchesTable) {
  // Tabulated upper tail of chi-square with 1 dof.
  EXPECT_NEAR(ChiSquare1Sf(3.841458820694124), 0.05, 1e-12);
  EXPECT_NEAR(ChiSquare1Sf(6.634896601021214), 0.01, 1e-12);
  EXPECT_NEAR(ChiSquare1Sf(10.0), 0.0015654022580025, 1e-12);
  EXPECT_NEAR(ChiSquare1Sf(2.5), 0.1138462980066, 1e-12);
  EXPECT_EQ(ChiSquare1Sf(0.0), 1.0);
}

TEST(StatsTest, HolmSingleTestIsIdentity) {
  const std::vector<double> p = {0.03};
  EXPECT_EQ(HolmAdjust(p), p);
}

TEST(StatsTest, HolmScalesAndStaysMonotone) {
  const std::vector<double> p = {0.01, 0.04, 0.03, 0.005};
  const auto adj = HolmAdjust(p);
  EXPECT_NEAR(adj[3], 0.02, 1e-15);  // 4 x 0.005
  EXPECT_NEAR(adj[0], 0.03, 1e-15);  // 3 x 0.01
  EXPECT_NEAR(adj[2], 0.06, 1e-15);  // 2 x 0.03
  EXPECT_NEAR(adj[1], 0.06, 1e-15);  // max(1 x 0.04, previous)
}

TEST(StatsTest, HolmTenTestsMultipliesSmallestByTen) {
  std::vector<double> p(10, 0.5);
  p[6] = 0.001;
  const auto adj = HolmAdjust(p);
  EXPECT_NEAR(adj[6], 0.01, 1e-15);
  for (double a : adj) EXPECT_LE(a, 1.0);
}

TEST(StatsTest, MeanAndMedian) {
  const std::vector<double> v = {20, 30};
  EXPECT_EQ(Mean(v), 25.0);
  EXPECT_EQ(Median({3, 1, 2}), 2.0);
  EXPECT_EQ(Median({4, 1, 2, 3}), 2.5);
}

TEST(StatsTest, TrimmedRangeDropsTails) {
  std::vector<int> v(1000, 2);
  for (int i = 0; i < 25; ++i) v[i] = 1;
  EXPECT_EQ(TrimmedRange(v, 0.025), std::make_pair(2, 2));
  v[25] = 1;
  EXPECT_EQ(TrimmedRange(v, 0.025), std::make_pair(1, 2));
  EXPECT_THROW(TrimmedRange({}, 0.025), Error);
}

}  // namespace
}  // namespace stb::stats
