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

#ifndef STB_SURVIVAL_H_
#define STB_SURVIVAL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stb/annotation.h"
#include "stb/censoring.h"
#include "stb/cox.h"
#include "stb/turnbull.h"

namespace stb::survival {

struct LogrankResult {
  // Observed minus expected events in group a under the pooled fit.
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};

// Two-sided permutation test of equal survival. Throws kPrecondition when a
// group is empty.
LogrankResult LogrankTest(std::span<const SurvivalObservation> a,
                          std::span<const SurvivalObservation> b,
                          int permutations = 2000, uint64_t rng_seed = 0);

struct PairwiseTest {
  std::string system_a;
  std::string system_b;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;
};

// Every unordered pair, Holm-adjusted across pairs.
std::vector<PairwiseTest> PairwiseTestsCorrected(
    const std::map<std::string, std::vector<SurvivalObservation>>& by_system,
    int permutations = 2000, uint64_t rng_seed = 0);

std::map<std::string, std::vector<SurvivalObservation>> GroupBySystem(
    std::span<const SurvivalObservation> obs);

enum class FeatureMode { kSingle, kSsa };

struct FeatureTally {
  int wins = 0;
  int losses = 0;
  int ties = 0;
};

// Comparisons of `system` against its opponents on one feature, or on
// sensibleness and specificity jointly in kSsa mode (`feature` ignored).
FeatureTally TallyFeature(std::span<const annotation::Judgment> judgments,
                          std::string_view system, annotation::Feature feature,
                          FeatureMode mode);
// Throws kUndefinedRate when every comparison is tied.
double FeatureWinRate(std::span<const annotation::Judgment> judgments,
                      std::string_view system, annotation::Feature feature,
                      FeatureMode mode);

struct SystemSurvival {
  std::string system;
  TurnbullEstimate estimate;
  std::optional<CoxResult> cox;
  std::string cox_error;
  std::array<std::optional<double>, 3> feature_win_rate;
  std::optional<double> ssa_win_rate;
};

struct SurvivalConfig {
  int permutations = 2000;
  uint64_t rng_seed = 0;
};

struct SurvivalReport {
  std::vector<SystemSurvival> systems;
  std::vector<PairwiseTest> tests;
  // Systems by descending S at ranking_time, the largest inspection time
  // shared by all systems.
  std::vector<std::string> ranking;
  double ranking_time = 0.0;
};

SurvivalReport AnalyzeSurvival(std::span<const annotation::Judgment> judgments,
                               const SurvivalConfig& config);

nlohmann::json ToJson(const SurvivalReport& report);
// system,time,survival rows for plotting.
std::string CurveCsv(const SurvivalReport& report);

}  // namespace stb::survival

#endif  // STB_SURVIVAL_H_
