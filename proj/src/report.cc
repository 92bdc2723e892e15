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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "stb/error.h"
#include "stb/rng.h"

namespace stb::report {
namespace {

using nlohmann::json;

std::string Fmt(double x, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string Fmt(const std::optional<double>& x, int digits = 2) {
  return x ? Fmt(*x, digits) : "n/a";
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kStorage, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::kStorage, "write failed for " + path.string());
}

}  // namespace

FullReport BuildReport(std::span<const annotation::Judgment> all,
                       const ReportConfig& config) {
  FullReport r;
  r.annotators = analyses::ScoreAnnotators(all, config.filter_below.value_or(0.75));
  std::vector<annotation::Judgment> judgments;
  if (config.filter_below) {
    judgments = analyses::RetainedOnly(all, r.annotators);
    r.notices.push_back(std::to_string(r.annotators.filtered.size()) +
                        " annotator(s) below " + Fmt(*config.filter_below) +
                        " removed");
  } else {
    judgments.assign(all.begin(), all.end());
  }
  r.judgments = judgments.size();

  const auto matches = ranking::MatchesFrom(judgments);
  ranking::BootstrapConfig bc;
  bc.replicates = config.bootstrap;
  bc.rng_seed = config.rng_seed;
  r.ranking = ranking::BootstrapRanking(matches, bc);
  r.win_rate_order = ranking::OrderByWinRate(matches);

  survival::SurvivalConfig sc;
  sc.permutations = config.permutations;
  sc.rng_seed = DeriveSeed(config.rng_seed, 1);
  r.survival = survival::AnalyzeSurvival(judgments, sc);
  r.survival_agrees = r.survival.ranking == r.win_rate_order;

  r.agreement = analyses::ComputeAgreement(judgments);
  r.segments = analyses::ComputeSegmentStats(judgments, config.segment_lengths);
  r.timing = analyses::ComputeTiming(judgments);

  if (config.stability_repetitions > 0) {
    std::map<std::pair<std::string, std::string>, std::set<std::string>> per_pair;
    for (const auto& m : matches) {
      per_pair[{std::min(m.first, m.second), std::max(m.first, m.second)}].insert(
          m.conversation_id);
    }
    size_t available = SIZE_MAX;
    for (const auto& [pair, ids] : per_pair) available = std::min(available, ids.size());
    analyses::StabilityConfig stc;
    stc.n_min = 3;
    stc.n_max = static_cast<int>(available);
    stc.repetitions = config.stability_repetitions;
    stc.rng_seed = DeriveSeed(config.rng_seed, 2);
    if (available != SIZE_MAX && stc.n_max >= stc.n_min) {
      r.stability = analyses::ComputeStability(matches, stc);
    } else {
      r.notices.push_back("too few conversations per pair for a stability curve");
    }
  }
  return r;
}

json ToJson(const FullReport& r) {
  json j = {{"judgments", r.judgments},
            {"ranking", ranking::ToJson(r.ranking)},
            {"survival", survival::ToJson(r.survival)},
            {"win_rate_order", r.win_rate_order},
            {"survival_agrees_with_win_rate", r.survival_agrees},
            {"agreement", analyses::ToJson(r.agreement)},
            {"annotators", analyses::ToJson(r.annotators)},
            {"segments", analyses::ToJson(r.segments)},
            {"timing", analyses::ToJson(r.timing)},
            {"notices", r.notices}};
  j["stability"] = r.stability ? analyses::ToJson(*r.stability) : json(nullptr);
  return j;
}

std::vector<std::string> CheckReportJson(const json& j) {
  std::vector<std::string> problems;
  for (const char* key : {"ranking", "survival", "agreement", "annotators", "segments",
                          "timing", "win_rate_order"}) {
    if (!j.contains(key)) problems.push_back(std::string("missing ") + key);
  }
  if (!problems.empty()) return problems;
  const json& systems = j["ranking"]["systems"];
  if (!systems.is_array() || systems.empty()) {
    problems.push_back("ranking has no systems");
    return problems;
  }
  const int b = static_cast<int>(systems.size());
  for (const auto& s : systems) {
    const int lo = s["range"][0].get<int>();
    const int hi = s["range"][1].get<int>();
    if (lo < 1 || hi > b || lo > hi) {
      problems.push_back("bad rank range for " + s["system"].get<std::string>());
    }
    const double wr = s["win_rate"].get<double>();
    if (wr < 0.0 || wr > 1.0) problems.push_back("win rate out of [0,1]");
  }
  size_t clustered = 0;
  for (const auto& c : j["ranking"]["clusters"]) clustered += c.size();
  if (clustered != systems.size()) problems.push_back("clusters do not partition systems");
  for (const auto& p : j["ranking"]["pairs"]) {
    const double pv = p["p_value"].get<double>();
    if (pv < 0.0 || pv > 1.0) problems.push_back("pair p-value out of [0,1]");
  }
  for (const auto& s : j["survival"]["systems"]) {
    double prev = 1.0;
    for (const auto& pt : s["curve"]) {
      const double v = pt["survival"].get<double>();
      if (v > prev + 1e-9 || v < 0.0) {
        problems.push_back("survival curve of " + s["system"].get<std::string>() +
                           " is not monotone in [0,1]");
        break;
      }
      prev = v;
    }
  }
  for (const auto& t : j["survival"]["pairwise_tests"]) {
    const double pa = t["p_adjusted"].get<double>();
    if (pa < t["p_raw"].get<double>() - 1e-12 || pa > 1.0) {
      problems.push_back("adjusted p-value inconsistent");
    }
  }
  return problems;
}

std::string ToMarkdown(const FullReport& r) {
  std::string md = "# Evaluation report\n\n";
  md += std::to_string(r.judgments) + " annotations analyzed.\n\n";
  for (const auto& n : r.notices) md += "> " + n + "\n\n";

  md += "## Pairwise win rates\n\nRow system's win rate against the column "
        "system. Bold: chi-square p < 0.05.\n\n";
  md += "| |";
  for (const auto& s : r.ranking.systems) md += " " + s.system + " |";
  md += " WR | Range |\n|---|";
  for (size_t i = 0; i < r.ranking.systems.size() + 2; ++i) md += "---|";
  md += "\n";
  for (const auto& row : r.ranking.systems) {
    md += "| " + row.system + " |";
    for (const auto& col : r.ranking.systems) {
      if (row.system == col.system) {
        md += " - |";
        continue;
      }
      const auto p = r.ranking.Pair(row.system, col.system);
      const std::string cell = Fmt(p->win_rate);
      md += p->significant ? " **" + cell + "** |" : " " + cell + " |";
    }
    md += " " + Fmt(row.win_rate) + " | (" + std::to_string(row.rank_low) + "," +
          std::to_string(row.rank_high) + ") |\n";
  }
  md += "\nClusters: ";
  for (size_t c = 0; c < r.ranking.clusters.size(); ++c) {
    if (c) md += " > ";
    md += "{";
    for (size_t i = 0; i < r.ranking.clusters[c].size(); ++i) {
      md += (i ? ", " : "") + r.ranking.clusters[c][i];
    }
    md += "}";
  }
  md += " (" + std::to_string(r.ranking.replicates) + " bootstrap replicates)\n\n";

  md += "## Survival\n\n| System |";
  std::set<double> times;
  for (const auto& s : r.survival.systems) times.insert(s.estimate.times.begin(), s.estimate.times.end());
  for (double t : times) md += " S(" + Fmt(t, 0) + ") |";
  md += "\n|---|";
  for (size_t i = 0; i < times.size(); ++i) md += "---|";
  md += "\n";
  for (const auto& s : r.survival.systems) {
    md += "| " + s.system + " |";
    for (double t : times) {
      const auto it = std::find(s.estimate.times.begin(), s.estimate.times.end(), t);
      md += it == s.estimate.times.end()
                ? " |"
                : " " + Fmt(s.estimate.survival[it - s.estimate.times.begin()]) + " |";
    }
    md += "\n";
  }
  md += "\nSurvival order at t=" + Fmt(r.survival.ranking_time, 0) + ": ";
  for (size_t i = 0; i < r.survival.ranking.size(); ++i) {
    md += (i ? " > " : "") + r.survival.ranking[i];
  }
  md += r.survival_agrees ? " (same as win-rate order)\n\n"
                          : " (differs from win-rate order)\n\n";
  md += "| Pair | p raw | p adjusted | significant |\n|---|---|---|---|\n";
  for (const auto& t : r.survival.tests) {
    md += "| " + t.system_a + " vs " + t.system_b + " | " + Fmt(t.p_raw, 4) + " | " +
          Fmt(t.p_adjusted, 4) + " | " + (t.significant ? "yes" : "no") + " |\n";
  }

  md += "\n## Features\n\nFeature win rates; bold marks a significant Cox "
        "coefficient (p < 0.05).\n\n| System | fluency | specificity | "
        "sensibleness | SSA |\n|---|---|---|---|---|\n";
  for (const auto& s : r.survival.systems) {
    md += "| " + s.system + " |";
    for (size_t f = 0; f < 3; ++f) {
      const std::string cell = Fmt(s.feature_win_rate[f]);
      const bool bold = s.cox && !s.cox->coefficients[f].dropped &&
                        s.cox->coefficients[f].significant;
      md += bold ? " **" + cell + "** |" : " " + cell + " |";
    }
    md += " " + Fmt(s.ssa_win_rate) + " |\n";
  }
  for (const auto& s : r.survival.systems) {
    if (!s.cox_error.empty()) md += "\nCox fit for " + s.system + ": " + s.cox_error + "\n";
  }

  md += "\n## Label agreement\n\n| System | bot | human | unsure |\n|---|---|---|---|\n";
  for (const auto& s : r.agreement.systems) {
    md += "| " + s.system + " | " + Fmt(s.labels[0].rate()) + " | " +
          Fmt(s.labels[2].rate()) + " | " + Fmt(s.labels[1].rate()) + " |\n";
  }

  md += "\n## Segment lengths\n\n| System | k | WR | HP | ties |\n|---|---|---|---|---|\n";
  for (const auto& c : r.segments.cells) {
    md += "| " + c.system + " | " + std::to_string(c.k) + " | " + Fmt(c.win_rate) +
          " | " + Fmt(c.human_rate) + " | " + Fmt(c.tie_rate) + " |\n";
  }
  for (const auto& n : r.segments.notices) md += "\n> " + n + "\n";

  md += "\n## Annotators\n\n" + std::to_string(r.annotators.workers.size()) +
        " workers, mean correctness " + Fmt(r.annotators.mean_score) +
        ", human correctness " + Fmt(r.annotators.mean_human_score) + ", " +
        Fmt(100.0 * r.annotators.share_below_half, 1) + "% below 0.5, " +
        std::to_string(r.annotators.filtered.size()) + " below " +
        Fmt(r.annotators.threshold) + ".\n";

  md += "\n## Timing\n\n";
  if (r.timing.empty()) {
    md += "No data.\n";
  } else {
    md += "| Domain | n | mean s | median s |\n|---|---|---|---|\n";
    for (const auto& t : r.timing) {
      md += "| " + t.domain + " | " + std::to_string(t.count) + " | " + Fmt(t.mean, 1) +
            " | " + Fmt(t.median, 1) + " |\n";
    }
  }

  if (r.stability) {
    const auto n = analyses::MinStableN(*r.stability);
    md += "\n## Stability\n\nSmallest n reaching 0.95: " +
          (n ? std::to_string(*n) : std::string("not reached")) + " (" +
          std::to_string(r.stability->repetitions) + " repetitions).\n";
  }
  return md;
}

void WriteReport(const FullReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kStorage, "cannot create " + dir.string());
  WriteFile(dir / "report.json", ToJson(report).dump(2));
  WriteFile(dir / "report.md", ToMarkdown(report));
  WriteFile(dir / "survival_curves.csv", survival::CurveCsv(report.survival));
}

}  // namespace stb::report
