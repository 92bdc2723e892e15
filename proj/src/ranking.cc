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

#include "stb/ranking.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "stb/error.h"
#include "stb/rng.h"
#include "stb/stats.h"

namespace stb::ranking {
namespace {

using annotation::EntityLabel;
using stats::NormalCdf;
using stats::NormalPdf;

// Truncated-Gaussian corrections. x is t - eps for a win.
double VWin(double x) {
  const double denom = NormalCdf(x);
  if (denom < 1e-300) return -x;
  return NormalPdf(x) / denom;
}

double WWin(double x) {
  const double v = VWin(x);
  const double w = v * (v + x);
  return std::clamp(w, 0.0, 1.0);
}

double VDraw(double t, double eps) {
  const double a = std::abs(t);
  const double denom = NormalCdf(eps - a) - NormalCdf(-eps - a);
  double v;
  if (denom < 1e-300) {
    v = -a + eps;
  } else {
    v = (NormalPdf(-eps - a) - NormalPdf(eps - a)) / denom;
  }
  return t < 0 ? -v : v;
}

double WDraw(double t, double eps) {
  const double a = std::abs(t);
  const double denom = NormalCdf(eps - a) - NormalCdf(-eps - a);
  if (denom < 1e-300) return 1.0;
  const double v = VDraw(a, eps);
  const double w =
      v * v + ((eps - a) * NormalPdf(eps - a) + (eps + a) * NormalPdf(eps + a)) /
                  denom;
  return std::clamp(w, 0.0, 1.0);
}

// Ratings indexed by position in `systems`; matches pre-resolved to indices.
struct IndexedMatch {
  int first;
  int second;
  Outcome outcome;
};

std::vector<IndexedMatch> IndexMatches(std::span<const Match> matches,
                                       const std::vector<std::string>& systems) {
  std::vector<IndexedMatch> out;
  out.reserve(matches.size());
  auto index_of = [&](const std::string& s) {
    return static_cast<int>(std::lower_bound(systems.begin(), systems.end(), s) -
                            systems.begin());
  };
  for (const Match& m : matches) {
    out.push_back({index_of(m.first), index_of(m.second), m.outcome});
  }
  return out;
}

std::vector<SkillRating> RunTrueSkill(std::vector<IndexedMatch>& matches,
                                      const std::vector<std::string>& systems,
                                      Rng& rng, const TrueSkillParams& params) {
  std::vector<SkillRating> ratings;
  ratings.reserve(systems.size());
  for (const auto& s : systems) ratings.push_back({s, params.mu0, params.sigma0});
  Shuffle(matches.begin(), matches.end(), rng);
  for (const IndexedMatch& m : matches) {
    SkillRating& a = ratings[m.first];
    SkillRating& b = ratings[m.second];
    switch (m.outcome) {
      case Outcome::kFirst: UpdateRatings(a, b, false, params); break;
      case Outcome::kSecond: UpdateRatings(b, a, false, params); break;
      case Outcome::kTie: UpdateRatings(a, b, true, params); break;
    }
  }
  return ratings;
}

// Rank (1-based) of each system by descending mu; equal mu breaks by name.
std::vector<int> RanksOf(const std::vector<SkillRating>& ratings) {
  std::vector<size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ratings[a].mu > ratings[b].mu;
  });
  std::vector<int> ranks(ratings.size());
  for (size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r) + 1;
  return ranks;
}

std::string Fixed(double x, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string PadRight(std::string s, size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string_view OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kFirst: return "first";
    case Outcome::kTie: return "tie";
    case Outcome::kSecond: return "second";
  }
  return "tie";
}

Outcome SegmentWinner(EntityLabel first, EntityLabel second) {
  if (first > second) return Outcome::kFirst;
  if (second > first) return Outcome::kSecond;
  return Outcome::kTie;
}

Outcome SegmentWinner(const annotation::Judgment& judgment) {
  if (!judgment.is_bot_bot()) {
    throw Error(ErrorKind::kPrecondition,
                "item " + judgment.item_id + " is human-human; no competition");
  }
  return SegmentWinner(judgment.labels[0], judgment.labels[1]);
}

std::vector<Match> MatchesFrom(std::span<const annotation::Judgment> judgments) {
  std::vector<Match> out;
  for (const auto& j : judgments) {
    if (!j.is_bot_bot()) continue;
    out.push_back({j.systems[0], j.systems[1], SegmentWinner(j), j.conversation_id,
                   j.k});
  }
  return out;
}

WinTally Tally(std::span<const Match> matches, std::string_view system_i,
               std::string_view system_j) {
  WinTally t{std::string(system_i), std::string(system_j), 0, 0, 0};
  for (const Match& m : matches) {
    int i_slot;
    if (m.first == system_i && m.second == system_j) {
      i_slot = 0;
    } else if (m.first == system_j && m.second == system_i) {
      i_slot = 1;
    } else {
      continue;
    }
    if (m.outcome == Outcome::kTie) {
      ++t.ties;
    } else if ((m.outcome == Outcome::kFirst) == (i_slot == 0)) {
      ++t.wins_i;
    } else {
      ++t.wins_j;
    }
  }
  return t;
}

double WinRate(const WinTally& tally) {
  if (tally.decisive() == 0) {
    throw Error(ErrorKind::kUndefinedRate,
                "no decisive annotations between " + tally.system_i + " and " +
                    tally.system_j);
  }
  return static_cast<double>(tally.wins_i) / tally.decisive();
}

ChiSquareResult ChiSquare(const WinTally& tally) {
  if (tally.decisive() == 0) {
    throw Error(ErrorKind::kUndefinedRate,
                "chi-square needs decisive annotations between " +
                    tally.system_i + " and " + tally.system_j);
  }
  const double expected = tally.decisive() / 2.0;
  const double di = tally.wins_i - expected;
  const double dj = tally.wins_j - expected;
  ChiSquareResult r;
  r.statistic = (di * di + dj * dj) / expected;
  r.p_value = stats::ChiSquare1Sf(r.statistic);
  return r;
}

double TrueSkillParams::DrawMargin() const {
  return stats::NormalQuantile((draw_probability + 1.0) / 2.0) *
         std::numbers::sqrt2 * beta;
}

void UpdateRatings(SkillRating& a, SkillRating& b, bool draw,
                   const TrueSkillParams& params) {
  const double var_a = a.sigma * a.sigma + params.tau * params.tau;
  const double var_b = b.sigma * b.sigma + params.tau * params.tau;
  const double c2 = 2.0 * params.beta * params.beta + var_a + var_b;
  const double c = std::sqrt(c2);
  const double t = (a.mu - b.mu) / c;
  const double eps = params.DrawMargin() / c;
  double v;
  double w;
  if (draw) {
    v = VDraw(t, eps);
    w = WDraw(t, eps);
  } else {
    v = VWin(t - eps);
    w = WWin(t - eps);
  }
  a.mu += var_a / c * v;
  b.mu -= var_b / c * v;
  a.sigma = std::sqrt(var_a * (1.0 - var_a / c2 * w));
  b.sigma = std::sqrt(var_b * (1.0 - var_b / c2 * w));
}

std::vector<std::string> SystemsOf(std::span<const Match> matches) {
  std::set<std::string> names;
  for (const Match& m : matches) {
    names.insert(m.first);
    names.insert(m.second);
  }
  return {names.begin(), names.end()};
}

std::vector<SkillRating> FitTrueSkill(std::span<const Match> matches,
                                      uint64_t rng_seed,
                                      const TrueSkillParams& params) {
  const auto systems = SystemsOf(matches);
  // Draws alone still move sigma, so only an empty match list is an error.
  if (systems.empty()) throw Error(ErrorKind::kNoMatches, "no matches to rate");
  auto indexed = IndexMatches(matches, systems);
  Rng rng = MakeRng(rng_seed, 0);
  auto ratings = RunTrueSkill(indexed, systems, rng, params);
  std::stable_sort(ratings.begin(), ratings.end(),
                   [](const SkillRating& a, const SkillRating& b) {
                     return a.mu > b.mu;
                   });
  return ratings;
}

const SystemSummary* RankingReport::Find(std::string_view system) const {
  for (const auto& s : systems) {
    if (s.system == system) return &s;
  }
  return nullptr;
}

std::optional<PairResult> RankingReport::Pair(std::string_view a,
                                              std::string_view b) const {
  for (const auto& p : pairs) {
    if (p.tally.system_i == a && p.tally.system_j == b) return p;
    if (p.tally.system_i == b && p.tally.system_j == a) {
      PairResult r = p;
      r.tally = p.tally.Swapped();
      r.win_rate = 1.0 - p.win_rate;
      return r;
    }
  }
  return std::nullopt;
}

std::vector<std::vector<std::string>> ClusterByRange(
    std::span<const SystemSummary> systems) {
  const size_t n = systems.size();
  std::vector<size_t> parent(n);
  std::iota(parent.begin(), parent.end(), size_t{0});
  auto find = [&](size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const bool overlap = systems[i].rank_low <= systems[j].rank_high &&
                           systems[j].rank_low <= systems[i].rank_high;
      if (overlap) parent[find(i)] = find(j);
    }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (systems[a].median_rank != systems[b].median_rank) {
      return systems[a].median_rank < systems[b].median_rank;
    }
    return systems[a].rank < systems[b].rank;
  });
  std::vector<std::vector<std::string>> clusters;
  std::map<size_t, size_t> root_to_cluster;
  for (size_t idx : order) {
    const size_t root = find(idx);
    auto it = root_to_cluster.find(root);
    if (it == root_to_cluster.end()) {
      it = root_to_cluster.emplace(root, clusters.size()).first;
      clusters.emplace_back();
    }
    clusters[it->second].push_back(systems[idx].system);
  }
  return clusters;
}

RankingReport BootstrapRanking(std::span<const Match> matches,
                               const BootstrapConfig& config) {
  const auto systems = SystemsOf(matches);
  const size_t b = systems.size();
  if (b < 2) {
    throw Error(ErrorKind::kPrecondition, "ranking needs at least 2 systems");
  }
  if (config.replicates < 1) {
    throw Error(ErrorKind::kPrecondition, "bootstrap needs at least 1 replicate");
  }

  RankingReport report;
  report.replicates = config.replicates;
  report.rng_seed = config.rng_seed;

  // Matches grouped per unordered pair, by system index.
  const auto indexed = IndexMatches(matches, systems);
  std::map<std::pair<int, int>, std::vector<IndexedMatch>> by_pair;
  for (const IndexedMatch& m : indexed) {
    by_pair[{std::min(m.first, m.second), std::max(m.first, m.second)}].push_back(m);
  }
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = i + 1; j < b; ++j) {
      PairResult pr;
      pr.tally = Tally(matches, systems[i], systems[j]);
      if (pr.tally.decisive() == 0) {
        throw Error(ErrorKind::kNoMatches, "pair " + systems[i] + " vs " +
                                               systems[j] +
                                               " has no decisive annotation");
      }
      pr.win_rate = WinRate(pr.tally);
      pr.chi_square = ChiSquare(pr.tally);
      pr.significant = pr.chi_square.p_value < 0.05;
      report.pairs.push_back(std::move(pr));
    }
  }

  std::vector<SystemSummary> summaries(b);
  for (size_t s = 0; s < b; ++s) summaries[s].system = systems[s];
  for (const IndexedMatch& m : indexed) {
    if (m.outcome == Outcome::kTie) {
      ++summaries[m.first].ties;
      ++summaries[m.second].ties;
    } else {
      const int winner = m.outcome == Outcome::kFirst ? m.first : m.second;
      const int loser = m.outcome == Outcome::kFirst ? m.second : m.first;
      ++summaries[winner].wins;
      ++summaries[loser].losses;
    }
  }
  for (auto& s : summaries) {
    const int d = s.wins + s.losses;
    s.win_rate = d > 0 ? static_cast<double>(s.wins) / d : 0.5;
  }

  {
    auto all = indexed;
    Rng rng = MakeRng(config.rng_seed, 0);
    const auto ratings = RunTrueSkill(all, systems, rng, config.params);
    const auto ranks = RanksOf(ratings);
    for (size_t s = 0; s < b; ++s) {
      summaries[s].mu = ratings[s].mu;
      summaries[s].sigma = ratings[s].sigma;
      summaries[s].rank = ranks[s];
    }
  }

  std::vector<std::vector<int>> rank_samples(b);
  for (auto& v : rank_samples) v.reserve(config.replicates);
  std::vector<IndexedMatch> resample;
  resample.reserve(indexed.size());
  for (int r = 0; r < config.replicates; ++r) {
    Rng rng = MakeRng(config.rng_seed, 1 + static_cast<uint64_t>(r));
    resample.clear();
    for (const auto& [pair, group] : by_pair) {
      for (size_t n = 0; n < group.size(); ++n) {
        resample.push_back(group[UniformIndex(rng, group.size())]);
      }
    }
    const auto ratings = RunTrueSkill(resample, systems, rng, config.params);
    const auto ranks = RanksOf(ratings);
    for (size_t s = 0; s < b; ++s) rank_samples[s].push_back(ranks[s]);
  }
  for (size_t s = 0; s < b; ++s) {
    auto [lo, hi] = stats::TrimmedRange(rank_samples[s], config.tail);
    summaries[s].rank_low = std::min(lo, summaries[s].rank);
    summaries[s].rank_high = std::max(hi, summaries[s].rank);
    std::vector<double> as_double(rank_samples[s].begin(), rank_samples[s].end());
    summaries[s].median_rank = stats::Median(std::move(as_double));
  }

  report.clusters = ClusterByRange(summaries);
  for (const auto& cluster : report.clusters) {
    for (const auto& name : cluster) {
      for (const auto& s : summaries) {
        if (s.system == name) report.systems.push_back(s);
      }
    }
  }
  return report;
}

std::vector<std::string> OrderByWinRate(std::span<const Match> matches) {
  std::map<std::string, std::pair<int, int>> record;  // wins, losses
  for (const Match& m : matches) {
    record.try_emplace(m.first, 0, 0);
    record.try_emplace(m.second, 0, 0);
    if (m.outcome == Outcome::kTie) continue;
    const std::string& w = m.outcome == Outcome::kFirst ? m.first : m.second;
    const std::string& l = m.outcome == Outcome::kFirst ? m.second : m.first;
    ++record[w].first;
    ++record[l].second;
  }
  std::vector<std::pair<std::string, double>> rated;
  for (const auto& [name, wl] : record) {
    const int d = wl.first + wl.second;
    rated.emplace_back(name, d > 0 ? static_cast<double>(wl.first) / d : 0.5);
  }
  std::stable_sort(rated.begin(), rated.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [name, rate] : rated) out.push_back(name);
  return out;
}

nlohmann::json ToJson(const RankingReport& report) {
  using nlohmann::json;
  json systems = json::array();
  for (const auto& s : report.systems) {
    systems.push_back({{"system", s.system},
                       {"wins", s.wins},
                       {"losses", s.losses},
                       {"ties", s.ties},
                       {"win_rate", s.win_rate},
                       {"mu", s.mu},
                       {"sigma", s.sigma},
                       {"rank", s.rank},
                       {"range", {s.rank_low, s.rank_high}},
                       {"median_rank", s.median_rank}});
  }
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"system_i", p.tally.system_i},
                     {"system_j", p.tally.system_j},
                     {"wins_i", p.tally.wins_i},
                     {"wins_j", p.tally.wins_j},
                     {"ties", p.tally.ties},
                     {"win_rate", p.win_rate},
                     {"chi_square", p.chi_square.statistic},
                     {"p_value", p.chi_square.p_value},
                     {"significant", p.significant}});
  }
  return {{"systems", systems},
          {"pairs", pairs},
          {"clusters", report.clusters},
          {"bootstrap", {{"replicates", report.replicates},
                         {"rng_seed", report.rng_seed}}}};
}

std::string FormatTable(const RankingReport& report) {
  std::vector<std::string> names;
  for (const auto& s : report.systems) names.push_back(s.system);
  size_t width = 6;
  for (const auto& n : names) width = std::max(width, n.size() + 2);

  std::string out = PadRight("", width);
  for (const auto& n : names) out += PadRight(n, width);
  out += PadRight("WR", width) + "Range\n";
  for (const auto& row : names) {
    out += PadRight(row, width);
    for (const auto& col : names) {
      if (row == col) {
        out += PadRight("-", width);
        continue;
      }
      const auto p = report.Pair(row, col);
      std::string cell = p ? Fixed(p->win_rate, 2) + (p->significant ? "*" : "") : "?";
      out += PadRight(cell, width);
    }
    const SystemSummary* s = report.Find(row);
    out += PadRight(Fixed(s->win_rate, 2), width);
    out += "(" + std::to_string(s->rank_low) + "," + std::to_string(s->rank_high) +
           ")\n";
  }
  out += "* chi-square p < 0.05\n";
  return out;
}

}  // namespace stb::ranking
