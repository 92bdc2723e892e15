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

#include "stb/analyses.h"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "stb/error.h"
#include "stb/rng.h"
#include "stb/stats.h"

namespace stb::analyses {
namespace {

using annotation::EntityLabel;
using annotation::Judgment;
using ranking::Match;
using ranking::Outcome;

// Decisive results of one conversation, oriented by system index.
struct ConversationWins {
  int lo_wins = 0;
  int hi_wins = 0;
};

struct PairData {
  int lo = 0;
  int hi = 0;
  std::vector<ConversationWins> conversations;
};

std::vector<PairData> GroupForStability(std::span<const Match> matches,
                                        const std::vector<std::string>& systems) {
  auto index_of = [&](const std::string& s) {
    return static_cast<int>(std::lower_bound(systems.begin(), systems.end(), s) -
                            systems.begin());
  };
  std::map<std::pair<int, int>, std::map<std::string, ConversationWins>> grouped;
  for (const Match& m : matches) {
    const int a = index_of(m.first);
    const int b = index_of(m.second);
    const int lo = std::min(a, b);
    const int hi = std::max(a, b);
    ConversationWins& c = grouped[{lo, hi}][m.conversation_id];
    if (m.outcome == Outcome::kTie) continue;
    const int winner = m.outcome == Outcome::kFirst ? a : b;
    (winner == lo ? c.lo_wins : c.hi_wins) += 1;
  }
  std::vector<PairData> pairs;
  const int b = static_cast<int>(systems.size());
  for (int i = 0; i < b; ++i) {
    for (int j = i + 1; j < b; ++j) {
      PairData p{i, j, {}};
      auto it = grouped.find({i, j});
      if (it != grouped.end()) {
        for (const auto& [id, wins] : it->second) p.conversations.push_back(wins);
      }
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

std::optional<double> Ratio(int num, int den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / den;
}

}  // namespace

StabilityCurve ComputeStability(std::span<const Match> matches,
                                const StabilityConfig& config) {
  if (config.n_min < 1 || config.n_max < config.n_min || config.n_step < 1) {
    throw Error(ErrorKind::kPrecondition, "invalid n range");
  }
  if (config.repetitions < 1) {
    throw Error(ErrorKind::kPrecondition, "stability needs at least 1 repetition");
  }
  const auto systems = ranking::SystemsOf(matches);
  if (systems.size() < 2) {
    throw Error(ErrorKind::kPrecondition, "stability needs at least 2 systems");
  }
  auto pairs = GroupForStability(matches, systems);
  for (const auto& p : pairs) {
    if (static_cast<int>(p.conversations.size()) < config.n_max) {
      throw Error(ErrorKind::kPrecondition,
                  "pair " + systems[p.lo] + " vs " + systems[p.hi] + " has " +
                      std::to_string(p.conversations.size()) +
                      " conversations, fewer than n=" + std::to_string(config.n_max));
    }
  }

  const size_t b = systems.size();
  StabilityCurve curve;
  curve.repetitions = config.repetitions;
  std::vector<int> wins(b);
  std::vector<int> losses(b);
  std::vector<int> order(b);
  std::vector<std::vector<size_t>> idx(pairs.size());
  for (size_t p = 0; p < pairs.size(); ++p) {
    idx[p].resize(pairs[p].conversations.size());
    std::iota(idx[p].begin(), idx[p].end(), size_t{0});
  }
  for (int n = config.n_min; n <= config.n_max; n += config.n_step) {
    std::map<std::vector<int>, int> counts;
    const uint64_t n_seed = DeriveSeed(config.rng_seed, static_cast<uint64_t>(n));
    for (int rep = 0; rep < config.repetitions; ++rep) {
      Rng rng = MakeRng(n_seed, static_cast<uint64_t>(rep));
      std::fill(wins.begin(), wins.end(), 0);
      std::fill(losses.begin(), losses.end(), 0);
      for (size_t p = 0; p < pairs.size(); ++p) {
        auto& ids = idx[p];
        const size_t total = ids.size();
        for (int s = 0; s < n; ++s) {
          std::swap(ids[s], ids[s + UniformIndex(rng, total - s)]);
          const ConversationWins& c = pairs[p].conversations[ids[s]];
          wins[pairs[p].lo] += c.lo_wins;
          losses[pairs[p].lo] += c.hi_wins;
          wins[pairs[p].hi] += c.hi_wins;
          losses[pairs[p].hi] += c.lo_wins;
        }
      }
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        const int dx = wins[x] + losses[x];
        const int dy = wins[y] + losses[y];
        const double rx = dx > 0 ? static_cast<double>(wins[x]) / dx : 0.5;
        const double ry = dy > 0 ? static_cast<double>(wins[y]) / dy : 0.5;
        return rx > ry;
      });
      ++counts[order];
    }
    int modal = 0;
    for (const auto& [ranking, c] : counts) modal = std::max(modal, c);
    curve.points.push_back({n, static_cast<double>(modal) / config.repetitions});
  }
  return curve;
}

std::optional<int> MinStableN(const StabilityCurve& curve, double threshold) {
  for (const auto& p : curve.points) {
    if (p.proportion >= threshold) return p.n;
  }
  return std::nullopt;
}

std::map<std::string, StabilityCurve> LeaveOneOut(std::span<const Match> matches,
                                                  const StabilityConfig& config) {
  const auto systems = ranking::SystemsOf(matches);
  if (systems.size() < 3) {
    throw Error(ErrorKind::kPrecondition, "leave-one-out needs at least 3 systems");
  }
  std::map<std::string, StabilityCurve> out;
  for (const auto& left_out : systems) {
    std::vector<Match> subset;
    for (const Match& m : matches) {
      if (m.first != left_out && m.second != left_out) subset.push_back(m);
    }
    out.emplace(left_out, ComputeStability(subset, config));
  }
  return out;
}

std::optional<double> LabelAgreement::rate() const {
  return Ratio(2 * both, 2 * both + single);
}

const SystemAgreement* AgreementTable::Find(std::string_view system) const {
  for (const auto& s : systems) {
    if (s.system == system) return &s;
  }
  return nullptr;
}

AgreementTable ComputeAgreement(std::span<const Judgment> judgments) {
  std::map<std::string, std::vector<const Judgment*>> by_item;
  for (const auto& j : judgments) by_item[j.item_id].push_back(&j);

  AgreementTable table;
  std::map<std::string, SystemAgreement> acc;
  std::map<std::string, std::pair<int, int>> identical;  // same, total
  for (const auto& j : judgments) {
    for (int slot = 0; slot < 2; ++slot) {
      auto& id = identical[j.systems[slot]];
      id.first += j.labels[0] == j.labels[1] ? 1 : 0;
      id.second += 1;
    }
  }
  for (const auto& [item, list] : by_item) {
    if (list.size() != 2) {
      table.excluded_items.push_back(item);
      continue;
    }
    const Judgment& a = *list[0];
    const Judgment& b = *list[1];
    for (int slot = 0; slot < 2; ++slot) {
      SystemAgreement& s = acc[a.systems[slot]];
      s.system = a.systems[slot];
      ++s.items;
      for (size_t l = 0; l < 3; ++l) {
        const auto label = static_cast<EntityLabel>(l);
        const bool in_a = a.labels[slot] == label;
        const bool in_b = b.labels[slot] == label;
        if (in_a && in_b) {
          ++s.labels[l].both;
        } else if (in_a || in_b) {
          ++s.labels[l].single;
        }
      }
    }
  }
  for (auto& [name, s] : acc) {
    const auto& id = identical[name];
    s.identical_rate = Ratio(id.first, id.second);
    table.systems.push_back(std::move(s));
  }
  return table;
}

CorrectnessReport ScoreAnnotators(std::span<const Judgment> judgments,
                                  double threshold) {
  struct Counts {
    int judged = 0, correct = 0, human_judged = 0, human_correct = 0;
  };
  std::map<std::string, Counts> by_worker;
  for (const auto& j : judgments) {
    Counts& c = by_worker[j.worker_id];
    for (int slot = 0; slot < 2; ++slot) {
      const bool is_human = j.truth[slot] == corpus::EntityKind::kHuman;
      const EntityLabel want = is_human ? EntityLabel::kHuman : EntityLabel::kBot;
      const bool ok = j.labels[slot] == want;
      ++c.judged;
      c.correct += ok ? 1 : 0;
      if (is_human) {
        ++c.human_judged;
        c.human_correct += ok ? 1 : 0;
      }
    }
  }
  CorrectnessReport report;
  report.threshold = threshold;
  std::vector<double> scores;
  std::vector<double> human_scores;
  int below_half = 0;
  for (const auto& [worker, c] : by_worker) {
    if (c.judged == 0) {
      throw Error(ErrorKind::kPrecondition, "worker " + worker + " has no judgments");
    }
    WorkerScore w;
    w.worker_id = worker;
    w.judgments = c.judged;
    w.correct = c.correct;
    w.score = static_cast<double>(c.correct) / c.judged;
    w.human_score = Ratio(c.human_correct, c.human_judged);
    scores.push_back(w.score);
    if (w.human_score) human_scores.push_back(*w.human_score);
    below_half += w.score < 0.5 ? 1 : 0;
    (w.score < threshold ? report.filtered : report.retained).insert(worker);
    report.workers.push_back(std::move(w));
  }
  report.mean_score = stats::Mean(scores);
  if (!human_scores.empty()) report.mean_human_score = stats::Mean(human_scores);
  report.share_below_half =
      scores.empty() ? 0.0 : static_cast<double>(below_half) / scores.size();
  return report;
}

std::vector<Judgment> RetainedOnly(std::span<const Judgment> judgments,
                                   const CorrectnessReport& report) {
  std::vector<Judgment> out;
  for (const auto& j : judgments) {
    if (report.retained.contains(j.worker_id)) out.push_back(j);
  }
  return out;
}

SegmentStats ComputeSegmentStats(std::span<const Judgment> judgments,
                                 std::span<const int> expected_lengths) {
  struct Counts {
    int wins = 0, losses = 0, ties = 0, judged = 0, human = 0;
  };
  std::map<std::pair<std::string, int>, Counts> cells;
  std::map<int, std::pair<int, int>> pool_ties;  // ties, total
  for (const auto& j : judgments) {
    if (!j.is_bot_bot()) continue;
    const Outcome outcome = ranking::SegmentWinner(j);
    auto& pt = pool_ties[j.k];
    pt.first += outcome == Outcome::kTie ? 1 : 0;
    pt.second += 1;
    for (int slot = 0; slot < 2; ++slot) {
      Counts& c = cells[{j.systems[slot], j.k}];
      ++c.judged;
      c.human += j.labels[slot] == EntityLabel::kHuman ? 1 : 0;
      if (outcome == Outcome::kTie) {
        ++c.ties;
      } else if ((outcome == Outcome::kFirst) == (slot == 0)) {
        ++c.wins;
      } else {
        ++c.losses;
      }
    }
  }
  SegmentStats out;
  for (const auto& [key, c] : cells) {
    SegmentCell cell;
    cell.system = key.first;
    cell.k = key.second;
    cell.win_rate = Ratio(c.wins, c.wins + c.losses);
    cell.human_rate = static_cast<double>(c.human) / c.judged;
    cell.tie_rate = static_cast<double>(c.ties) / c.judged;
    cell.comparisons = c.judged;
    out.cells.push_back(std::move(cell));
  }
  for (const auto& [k, t] : pool_ties) {
    out.tie_rate[k] = static_cast<double>(t.first) / t.second;
  }
  for (int k : expected_lengths) {
    if (!pool_ties.contains(k)) {
      out.notices.push_back("no bot-bot annotations at segment length " +
                            std::to_string(k));
    }
  }
  return out;
}

std::vector<TimingCell> ComputeTiming(std::span<const Judgment> judgments) {
  std::map<std::string, std::vector<double>> by_domain;
  for (const auto& j : judgments) by_domain[j.domain].push_back(j.duration_seconds);
  std::vector<TimingCell> out;
  for (auto& [domain, durations] : by_domain) {
    TimingCell cell;
    cell.domain = domain;
    cell.count = static_cast<int>(durations.size());
    cell.mean = stats::Mean(durations);
    cell.median = stats::Median(std::move(durations));
    out.push_back(std::move(cell));
  }
  return out;
}

nlohmann::json ToJson(const StabilityCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"n", p.n}, {"proportion", p.proportion}});
  }
  const auto min_n = MinStableN(curve);
  return {{"repetitions", curve.repetitions},
          {"points", points},
          {"min_stable_n", min_n ? nlohmann::json(*min_n) : nlohmann::json(nullptr)}};
}

nlohmann::json ToJson(const AgreementTable& table) {
  using nlohmann::json;
  json systems = json::array();
  for (const auto& s : table.systems) {
    json labels = json::object();
    for (size_t l = 0; l < 3; ++l) {
      const auto r = s.labels[l].rate();
      labels[std::string(annotation::LabelName(static_cast<EntityLabel>(l)))] =
          r ? json(*r) : json(nullptr);
    }
    systems.push_back({{"system", s.system},
                       {"items", s.items},
                       {"agreement", labels},
                       {"identical_rate",
                        s.identical_rate ? json(*s.identical_rate) : json(nullptr)}});
  }
  return {{"systems", systems}, {"excluded_items", table.excluded_items}};
}

nlohmann::json ToJson(const CorrectnessReport& report) {
  using nlohmann::json;
  json workers = json::array();
  for (const auto& w : report.workers) {
    workers.push_back({{"worker_id", w.worker_id},
                       {"judgments", w.judgments},
                       {"score", w.score},
                       {"human_score", w.human_score ? json(*w.human_score)
                                                     : json(nullptr)},
                       {"retained", report.retained.contains(w.worker_id)}});
  }
  return {{"threshold", report.threshold},
          {"workers", workers},
          {"mean_score", report.mean_score},
          {"mean_human_score", report.mean_human_score ? json(*report.mean_human_score)
                                                       : json(nullptr)},
          {"share_below_half", report.share_below_half},
          {"filtered", report.filtered}};
}

nlohmann::json ToJson(const SegmentStats& stats) {
  using nlohmann::json;
  json cells = json::array();
  for (const auto& c : stats.cells) {
    cells.push_back({{"system", c.system},
                     {"k", c.k},
                     {"win_rate", c.win_rate ? json(*c.win_rate) : json(nullptr)},
                     {"human_rate", c.human_rate},
                     {"tie_rate", c.tie_rate},
                     {"comparisons", c.comparisons}});
  }
  json ties = json::object();
  for (const auto& [k, r] : stats.tie_rate) ties[std::to_string(k)] = r;
  return {{"cells", cells}, {"tie_rate", ties}, {"notices", stats.notices}};
}

nlohmann::json ToJson(std::span<const TimingCell> timing) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : timing) {
    out.push_back({{"domain", t.domain},
                   {"count", t.count},
                   {"mean_seconds", t.mean},
                   {"median_seconds", t.median}});
  }
  return out;
}

std::string StabilityCsv(const StabilityCurve& curve) {
  std::string out = "n,proportion\n";
  char buf[64];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f\n", p.n, p.proportion);
    out += buf;
  }
  return out;
}

}  // namespace stb::analyses
