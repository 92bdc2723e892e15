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

#include "stb/report.h"

#include <gtest/gtest.h>
#include <stdlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stb/error.h"
#include "synth.h"

namespace stb::report {
namespace {

using nlohmann::json;

std::vector<annotation::Judgment> Pool() {
  testing::PoolSpec spec;
  spec.systems = {"Strong", "Middle", "Weak"};
  spec.hazards = {0.05, 0.25, 0.8};
  spec.per_pair = 20;
  spec.seed = 11;
  return testing::SimulatePool(spec);
}

ReportConfig SmallConfig() {
  ReportConfig c;
  c.bootstrap = 100;
  c.permutations = 200;
  c.rng_seed = 5;
  c.segment_lengths = {2, 3, 5};
  return c;
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(ReportTest, BuiltReportPassesStructuralCheck) {
  const auto judgments = Pool();
  const FullReport r = BuildReport(judgments, SmallConfig());
  EXPECT_EQ(r.judgments, judgments.size());
  const json j = ToJson(r);
  EXPECT_TRUE(CheckReportJson(j).empty());
  EXPECT_EQ(r.win_rate_order.front(), "Strong");
  EXPECT_EQ(r.win_rate_order.back(), "Weak");
  EXPECT_TRUE(j["stability"].is_null());
}

TEST(ReportTest, CheckFlagsBrokenDocuments) {
  const json good = ToJson(BuildReport(Pool(), SmallConfig()));
  EXPECT_FALSE(CheckReportJson(json::object()).empty());

  json bad_range = good;
  bad_range["ranking"]["systems"][0]["range"] = {0, 9};
  EXPECT_FALSE(CheckReportJson(bad_range).empty());

  json bad_curve = good;
  auto& curve = bad_curve["survival"]["systems"][0]["curve"];
  ASSERT_GE(curve.size(), 2u);
  curve[0]["survival"] = 0.1;
  curve[1]["survival"] = 0.9;
  EXPECT_FALSE(CheckReportJson(bad_curve).empty());

  json bad_clusters = good;
  bad_clusters["ranking"]["clusters"] = json::array();
  EXPECT_FALSE(CheckReportJson(bad_clusters).empty());
}

TEST(ReportTest, FilterAddsNotice) {
  const auto judgments = Pool();
  const auto scores = analyses::ScoreAnnotators(judgments, 0.75);
  std::vector<double> s;
  for (const auto& w : scores.workers) s.push_back(w.score);
  std::sort(s.begin(), s.end());
  ReportConfig c = SmallConfig();
  c.filter_below = s[s.size() / 2];
  const FullReport r = BuildReport(judgments, c);
  ASSERT_FALSE(r.notices.empty());
  EXPECT_NE(r.notices.front().find("removed"), std::string::npos);
  EXPECT_GT(r.annotators.filtered.size(), 0u);
  EXPECT_LT(r.judgments, judgments.size());

  c.filter_below = 1.01;
  EXPECT_THROW(BuildReport(judgments, c), Error);
}

TEST(ReportTest, StabilityCurveWhenRequested) {
  ReportConfig c = SmallConfig();
  c.stability_repetitions = 20;
  const FullReport r = BuildReport(Pool(), c);
  ASSERT_TRUE(r.stability.has_value());
  EXPECT_FALSE(ToJson(r)["stability"].is_null());
  EXPECT_NE(ToMarkdown(r).find("## Stability"), std::string::npos);
}

TEST(ReportTest, WritesThreeFiles) {
  char tmpl[] = "/tmp/stb-report-XXXXXX";
  ASSERT_NE(mkdtemp(tmpl), nullptr);
  const std::filesystem::path dir = std::filesystem::path(tmpl) / "out";
  const FullReport r = BuildReport(Pool(), SmallConfig());
  WriteReport(r, dir);

  const json j = json::parse(Slurp(dir / "report.json"));
  EXPECT_TRUE(CheckReportJson(j).empty());
  const std::string md = Slurp(dir / "report.md");
  for (const char* heading : {"## Pairwise win rates", "## Survival", "## Features",
                              "## Label agreement", "## Annotators"}) {
    EXPECT_NE(md.find(heading), std::string::npos) << heading;
  }
  const std::string csv = Slurp(dir / "survival_curves.csv");
  EXPECT_NE(csv.find("Strong"), std::string::npos);
  EXPECT_NE(csv.find("Weak"), std::string::npos);
  std::filesystem::remove_all(tmpl);
}

TEST(ReportTest, DeterministicForSeed) {
  const auto judgments = Pool();
  EXPECT_EQ(ToJson(BuildReport(judgments, SmallConfig())).dump(),
            ToJson(BuildReport(judgments, SmallConfig())).dump());
}

}  // namespace
}  // namespace stb::report
