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

#ifndef STB_ANALYSES_H_
#define STB_ANALYSES_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stb/annotation.h"
#include "stb/ranking.h"

namespace stb::analyses {

struct StabilityPoint {
  int n = 0;
  // Share of repetitions that produced the most common ranking.
  double proportion = 0.0;
};

struct StabilityCurve {
  std::vector<StabilityPoint> points;
  int repetitions = 0;
};

struct StabilityConfig {
  int n_min = 3;
  int n_max = 45;
  int n_step = 1;
  int repetitions = 1000;
  uint64_t rng_seed = 0;
};

// For each n, draws n conversations per pair without replacement, orders the
// systems by pooled win rate and counts how often the modal order appears.
// Throws kPrecondition when some pair has fewer than n_max conversations.
StabilityCurve ComputeStability(std::span<const ranking::Match> matches,
                                const StabilityConfig& config);

// Smallest n whose proportion reaches `threshold`.
std::optional<int> MinStableN(const StabilityCurve& curve, double threshold = 0.95);

// Stability of the pool without each system in turn. Needs >= 3 systems.
std::map<std::string, StabilityCurve> LeaveOneOut(
    std::span<const ranking::Match> matches, const StabilityConfig& config);

struct LabelAgreement {
  // Items where both annotators gave the label, and where exactly one did.
  int both = 0;
  int single = 0;
  // Chance that the second annotator also picks the label when one does.
  std::optional<double> rate() const;
};

struct SystemAgreement {
  std::string system;
  std::array<LabelAgreement, 3> labels;  // indexed by EntityLabel
  int items = 0;
  // Share of annotations giving both entities of the segment the same label.
  std::optional<double> identical_rate;
};

struct AgreementTable {
  std::vector<SystemAgreement> systems;
  // Items with a number of annotations other than 2.
  std::vector<std::string> excluded_items;

  const SystemAgreement* Find(std::string_view system) const;
};

AgreementTable ComputeAgreement(std::span<const annotation::Judgment> judgments);

struct WorkerScore {
  std::string worker_id;
  int judgments = 0;
  int correct = 0;
  double score = 0.0;
  // Restricted to entities that were human.
  std::optional<double> human_score;
};

struct CorrectnessReport {
  std::vector<WorkerScore> workers;
  std::set<std::string> retained;
  std::set<std::string> filtered;
  double threshold = 0.75;
  double mean_score = 0.0;
  std::optional<double> mean_human_score;
  double share_below_half = 0.0;
};

// Entity labels scored against ground truth; "unsure" counts as wrong.
CorrectnessReport ScoreAnnotators(std::span<const annotation::Judgment> judgments,
                                  double threshold = 0.75);

// Judgments by retained workers only.
std::vector<annotation::Judgment> RetainedOnly(
    std::span<const annotation::Judgment> judgments, const CorrectnessReport& report);

struct SegmentCell {
  std::string system;
  int k = 0;
  std::optional<double> win_rate;
  double human_rate = 0.0;
  double tie_rate = 0.0;
  int comparisons = 0;
};

struct SegmentStats {
  std::vector<SegmentCell> cells;
  // Pool-wide share of tied comparisons per segment length.
  std::map<int, double> tie_rate;
  std::vector<std::string> notices;
};

// Bot-bot judgments only. Lengths in `expected_lengths` without any data are
// reported in `notices`.
SegmentStats ComputeSegmentStats(std::span<const annotation::Judgment> judgments,
                                 std::span<const int> expected_lengths = {});

struct TimingCell {
  std::string domain;
  int count = 0;
  double mean = 0.0;
  double median = 0.0;
};

// Empty when there is no data.
std::vector<TimingCell> ComputeTiming(std::span<const annotation::Judgment> judgments);

nlohmann::json ToJson(const StabilityCurve& curve);
nlohmann::json ToJson(const AgreementTable& table);
nlohmann::json ToJson(const CorrectnessReport& report);
nlohmann::json ToJson(const SegmentStats& stats);
nlohmann::json ToJson(std::span<const TimingCell> timing);

// n,proportion rows.
std::string StabilityCsv(const StabilityCurve& curve);

}  // namespace stb::analyses

#endif  // STB_ANALYSES_H_
