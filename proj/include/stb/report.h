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

#ifndef STB_REPORT_H_
#define STB_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stb/analyses.h"
#include "stb/annotation.h"
#include "stb/ranking.h"
#include "stb/survival.h"

namespace stb::report {

struct ReportConfig {
  int bootstrap = 1000;
  int permutations = 2000;
  uint64_t rng_seed = 0;
  // 0 skips the stability curve.
  int stability_repetitions = 0;
  // When set, workers scoring below it are dropped before every analysis.
  std::optional<double> filter_below;
  std::vector<int> segment_lengths;
};

struct FullReport {
  ranking::RankingReport ranking;
  survival::SurvivalReport survival;
  analyses::AgreementTable agreement;
  analyses::CorrectnessReport annotators;
  analyses::SegmentStats segments;
  std::vector<analyses::TimingCell> timing;
  std::optional<analyses::StabilityCurve> stability;
  std::vector<std::string> win_rate_order;
  bool survival_agrees = false;
  size_t judgments = 0;
  std::vector<std::string> notices;
};

FullReport BuildReport(std::span<const annotation::Judgment> judgments,
                       const ReportConfig& config);

nlohmann::json ToJson(const FullReport& report);
std::string ToMarkdown(const FullReport& report);

// Structural check of a serialized report; returns the problems found.
std::vector<std::string> CheckReportJson(const nlohmann::json& j);

// report.json, report.md and survival_curves.csv under `dir`.
void WriteReport(const FullReport& report, const std::filesystem::path& dir);

}  // namespace stb::report

#endif  // STB_REPORT_H_
