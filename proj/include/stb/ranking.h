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

#ifndef STB_RANKING_H_
#define STB_RANKING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stb/annotation.h"

namespace stb::ranking {

enum class Outcome { kFirst, kTie, kSecond };

std::string_view OutcomeName(Outcome outcome);

// The higher label under human > unsure > bot wins the segment.
Outcome SegmentWinner(annotation::EntityLabel first,
                      annotation::EntityLabel second);
// Throws kPrecondition for human-human items.
Outcome SegmentWinner(const annotation::Judgment& judgment);

// One annotator's verdict on one bot-bot segment.
struct Match {
  std::string first;
  std::string second;
  Outcome outcome = Outcome::kTie;
  std::string conversation_id;
  int k = 0;
};

// Bot-bot judgments only; human-human ones are skipped.
std::vector<Match> MatchesFrom(std::span<const annotation::Judgment> judgments);

struct WinTally {
  std::string system_i;
  std::string system_j;
  int wins_i = 0;
  int wins_j = 0;
  int ties = 0;

  int decisive() const { return wins_i + wins_j; }
  int total() const { return wins_i + wins_j + ties; }
  WinTally Swapped() const { return {system_j, system_i, wins_j, wins_i, ties}; }
};

WinTally Tally(std::span<const Match> matches, std::string_view system_i,
               std::string_view system_j);

// wins_i / (wins_i + wins_j). Throws kUndefinedRate when nothing is decisive.
double WinRate(const WinTally& tally);

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// 1-dof goodness of fit of (wins_i, wins_j) against an even split.
ChiSquareResult ChiSquare(const WinTally& tally);

struct TrueSkillParams {
  double mu0 = 25.0;
  double sigma0 = 25.0 / 3.0;
  double beta = 25.0 / 6.0;
  double tau = 25.0 / 300.0;
  double draw_probability = 0.1;

  double DrawMargin() const;
};

struct SkillRating {
  std::string system;
  double mu = 0.0;
  double sigma = 0.0;
};

// In-place two-player update. `a` is the winner unless `draw`.
void UpdateRatings(SkillRating& a, SkillRating& b, bool draw,
                   const TrueSkillParams& params);

// Sequential updates over all matches in an order shuffled by `rng_seed`.
// Sorted by descending mu. Throws kNoMatches if a system never has a
// decisive match.
std::vector<SkillRating> FitTrueSkill(std::span<const Match> matches,
                                      uint64_t rng_seed,
                                      const TrueSkillParams& params = {});

// Distinct systems appearing in matches, sorted by name.
std::vector<std::string> SystemsOf(std::span<const Match> matches);

struct PairResult {
  WinTally tally;
  double win_rate = 0.0;  // of system_i over system_j
  ChiSquareResult chi_square;
  bool significant = false;  // p < 0.05
};

struct SystemSummary {
  std::string system;
  int wins = 0;
  int losses = 0;
  int ties = 0;
  double win_rate = 0.0;  // pooled over all opponents
  double mu = 0.0;
  double sigma = 0.0;
  int rank = 0;  // on the full data
  int rank_low = 0;
  int rank_high = 0;
  double median_rank = 0.0;
};

struct RankingReport {
  // Ordered by cluster, then median rank.
  std::vector<SystemSummary> systems;
  // One entry per unordered pair, system_i < system_j by name.
  std::vector<PairResult> pairs;
  std::vector<std::vector<std::string>> clusters;
  int replicates = 0;
  uint64_t rng_seed = 0;

  const SystemSummary* Find(std::string_view system) const;
  // Oriented so that tally.system_i == a.
  std::optional<PairResult> Pair(std::string_view a, std::string_view b) const;
};

struct BootstrapConfig {
  int replicates = 1000;
  uint64_t rng_seed = 0;
  double tail = 0.025;
  TrueSkillParams params;
};

// Resamples every pair's matches independently with replacement, refits
// TrueSkill per replicate, and derives rank ranges and clusters. Throws
// kNoMatches when some pair has no decisive match.
RankingReport BootstrapRanking(std::span<const Match> matches,
                               const BootstrapConfig& config);

// Transitive closure of range overlap, ordered by median rank.
std::vector<std::vector<std::string>> ClusterByRange(
    std::span<const SystemSummary> systems);

// Systems ordered by pooled win rate; undefined rates count as 0.5 and
// ties break by name.
std::vector<std::string> OrderByWinRate(std::span<const Match> matches);

nlohmann::json ToJson(const RankingReport& report);
// Pair matrix with significance stars, WR and range columns.
std::string FormatTable(const RankingReport& report);

}  // namespace stb::ranking

#endif  // STB_RANKING_H_
