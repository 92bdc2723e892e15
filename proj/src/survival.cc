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

#include "stb/survival.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numeric>
#include <set>
#include <utility>

#include "stb/error.h"
#include "stb/rng.h"
#include "stb/stats.h"

namespace stb::survival {
namespace {

using annotation::Feature;

std::vector<std::pair<double, bool>> Signature(std::span<const SurvivalObservation> g) {
  std::vector<std::pair<double, bool>> sig;
  sig.reserve(g.size());
  for (const auto& o : g) sig.emplace_back(o.time(), o.spotted());
  std::sort(sig.begin(), sig.end());
  return sig;
}

}  // namespace

LogrankResult LogrankTest(std::span<const SurvivalObservation> a,
                          std::span<const SurvivalObservation> b,
                          int permutations, uint64_t rng_seed) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorKind::kPrecondition, "log-rank test needs two non-empty groups");
  }
  LogrankResult result;
  result.permutations = permutations;

  // Fix an orientation that does not depend on argument order, so that the
  // permutation draws (and therefore p) are the same either way round.
  bool a_first = a.size() < b.size();
  if (a.size() == b.size()) a_first = Signature(a) <= Signature(b);
  std::span<const SurvivalObservation> first = a_first ? a : b;
  std::span<const SurvivalObservation> second = a_first ? b : a;

  std::vector<SurvivalObservation> pooled(first.begin(), first.end());
  pooled.insert(pooled.end(), second.begin(), second.end());
  const bool any_event = std::any_of(pooled.begin(), pooled.end(),
                                     [](const auto& o) { return o.spotted(); });
  if (!any_event) return result;

  const TurnbullEstimate fit = TurnbullFit(pooled);
  std::vector<double> residual(pooled.size());
  for (size_t i = 0; i < pooled.size(); ++i) {
    const double expected = 1.0 - SurvivalAt(fit, pooled[i].time());
    residual[i] = (pooled[i].spotted() ? 1.0 : 0.0) - expected;
  }
  // Residuals sum to zero at the exact NPMLE; centering strips the EM
  // tolerance so the two groups' scores are exact negatives.
  const double mean =
      std::accumulate(residual.begin(), residual.end(), 0.0) / residual.size();
  for (double& r : residual) r -= mean;
  const size_t n1 = first.size();
  double u_first = 0.0;
  for (size_t i = 0; i < n1; ++i) u_first += residual[i];
  result.statistic = a_first ? u_first : -u_first;

  if (permutations <= 0) {
    result.p_value = 1.0;
    return result;
  }
  const double threshold = std::abs(u_first) - 1e-9;
  Rng rng = MakeRng(rng_seed, 0);
  std::vector<double> work = residual;
  const size_t n = work.size();
  int extreme = 0;
  for (int p = 0; p < permutations; ++p) {
    double u = 0.0;
    for (size_t i = 0; i < n1; ++i) {
      std::swap(work[i], work[i + UniformIndex(rng, n - i)]);
      u += work[i];
    }
    if (std::abs(u) >= threshold) ++extreme;
  }
  result.p_value = (1.0 + extreme) / (1.0 + permutations);
  return result;
}

std::map<std::string, std::vector<SurvivalObservation>> GroupBySystem(
    std::span<const SurvivalObservation> obs) {
  std::map<std::string, std::vector<SurvivalObservation>> out;
  for (const auto& o : obs) out[o.system].push_back(o);
  return out;
}

std::vector<PairwiseTest> PairwiseTestsCorrected(
    const std::map<std::string, std::vector<SurvivalObservation>>& by_system,
    int permutations, uint64_t rng_seed) {
  if (by_system.size() < 2) {
    throw Error(ErrorKind::kPrecondition, "pairwise tests need at least 2 systems");
  }
  std::vector<PairwiseTest> tests;
  uint64_t task = 0;
  for (auto i = by_system.begin(); i != by_system.end(); ++i) {
    for (auto j = std::next(i); j != by_system.end(); ++j) {
      const auto r = LogrankTest(i->second, j->second, permutations,
                                 DeriveSeed(rng_seed, task++));
      tests.push_back({i->first, j->first, r.statistic, r.p_value, 1.0, false});
    }
  }
  std::vector<double> raw;
  for (const auto& t : tests) raw.push_back(t.p_raw);
  const auto adjusted = stats::HolmAdjust(raw);
  for (size_t k = 0; k < tests.size(); ++k) {
    tests[k].p_adjusted = adjusted[k];
    tests[k].significant = adjusted[k] < 0.05;
  }
  return tests;
}

FeatureTally TallyFeature(std::span<const annotation::Judgment> judgments,
                          std::string_view system, Feature feature,
                          FeatureMode mode) {
  FeatureTally t;
  for (const auto& j : judgments) {
    if (!j.is_bot_bot()) continue;
    for (int slot = 0; slot < 2; ++slot) {
      if (j.systems[slot] != system) continue;
      int outcome;
      if (mode == FeatureMode::kSingle) {
        outcome = annotation::EncodeFeature(j.preference(feature), slot);
      } else {
        const int sens = annotation::EncodeFeature(j.preference(Feature::kSensibleness), slot);
        const int spec = annotation::EncodeFeature(j.preference(Feature::kSpecificity), slot);
        outcome = (sens == 1 && spec == 1) ? 1 : (sens == -1 && spec == -1) ? -1 : 0;
      }
      if (outcome > 0) {
        ++t.wins;
      } else if (outcome < 0) {
        ++t.losses;
      } else {
        ++t.ties;
      }
    }
  }
  return t;
}

double FeatureWinRate(std::span<const annotation::Judgment> judgments,
                      std::string_view system, Feature feature, FeatureMode mode) {
  const FeatureTally t = TallyFeature(judgments, system, feature, mode);
  if (t.wins + t.losses == 0) {
    throw Error(ErrorKind::kUndefinedRate,
                "no decisive " +
                    std::string(mode == FeatureMode::kSsa ? "ssa"
                                                          : annotation::FeatureName(feature)) +
                    " comparison for " + std::string(system));
  }
  return static_cast<double>(t.wins) / (t.wins + t.losses);
}

SurvivalReport AnalyzeSurvival(std::span<const annotation::Judgment> judgments,
                               const SurvivalConfig& config) {
  const auto obs = EncodeObservations(judgments);
  const auto by_system = GroupBySystem(obs);
  if (by_system.empty()) {
    throw Error(ErrorKind::kPrecondition, "no bot-bot annotations to analyze");
  }
  SurvivalReport report;
  uint64_t task = 0;
  for (const auto& [name, group] : by_system) {
    SystemSurvival s;
    s.system = name;
    s.estimate = TurnbullFit(group);
    try {
      CoxOptions options;
      options.drop_constant = true;
      options.rng_seed = DeriveSeed(config.rng_seed, 1000 + task);
      s.cox = FitCox(FeatureDesign(group), options);
    } catch (const Error& e) {
      s.cox_error = e.what();
    }
    ++task;
    for (Feature f : annotation::kFeatures) {
      try {
        s.feature_win_rate[static_cast<size_t>(f)] =
            FeatureWinRate(judgments, name, f, FeatureMode::kSingle);
      } catch (const Error&) {
      }
    }
    try {
      s.ssa_win_rate =
          FeatureWinRate(judgments, name, Feature::kSensibleness, FeatureMode::kSsa);
    } catch (const Error&) {
    }
    report.systems.push_back(std::move(s));
  }
  if (by_system.size() >= 2) {
    report.tests = PairwiseTestsCorrected(by_system, config.permutations, config.rng_seed);
  }

  std::set<double> common(report.systems.front().estimate.times.begin(),
                          report.systems.front().estimate.times.end());
  for (const auto& s : report.systems) {
    std::set<double> here(s.estimate.times.begin(), s.estimate.times.end());
    std::set<double> keep;
    std::set_intersection(common.begin(), common.end(), here.begin(), here.end(),
                          std::inserter(keep, keep.begin()));
    common.swap(keep);
  }
  if (!common.empty()) {
    report.ranking_time = *common.rbegin();
    std::vector<std::pair<std::string, double>> at;
    for (const auto& s : report.systems) {
      at.emplace_back(s.system, SurvivalAt(s.estimate, report.ranking_time));
    }
    std::stable_sort(at.begin(), at.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    for (auto& [name, v] : at) report.ranking.push_back(name);
  }
  return report;
}

nlohmann::json ToJson(const SurvivalReport& report) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  json systems = json::array();
  for (const auto& s : report.systems) {
    json curve = json::array();
    for (size_t i = 0; i < s.estimate.times.size(); ++i) {
      curve.push_back({{"time", s.estimate.times[i]}, {"survival", s.estimate.survival[i]}});
    }
    json cox = nullptr;
    if (s.cox) {
      json coefs = json::array();
      for (const auto& c : s.cox->coefficients) {
        coefs.push_back({{"covariate", c.name},
                         {"beta", c.beta},
                         {"se", c.se},
                         {"z", c.z},
                         {"p_value", c.p_value},
                         {"significant", c.significant},
                         {"dropped", c.dropped}});
      }
      cox = {{"coefficients", coefs},
             {"baseline", s.cox->baseline},
             {"times", s.cox->times},
             {"log_likelihood", s.cox->log_likelihood},
             {"converged", s.cox->converged}};
    }
    json fwr = json::object();
    for (Feature f : annotation::kFeatures) {
      fwr[std::string(annotation::FeatureName(f))] =
          opt(s.feature_win_rate[static_cast<size_t>(f)]);
    }
    fwr["ssa"] = opt(s.ssa_win_rate);
    systems.push_back({{"system", s.system},
                       {"curve", curve},
                       {"turnbull", {{"iterations", s.estimate.iterations},
                                     {"converged", s.estimate.converged},
                                     {"residual", s.estimate.residual}}},
                       {"cox", cox},
                       {"cox_error", s.cox_error.empty() ? json(nullptr)
                                                         : json(s.cox_error)},
                       {"feature_win_rate", fwr}});
  }
  json tests = json::array();
  for (const auto& t : report.tests) {
    tests.push_back({{"system_a", t.system_a},
                     {"system_b", t.system_b},
                     {"statistic", t.statistic},
                     {"p_raw", t.p_raw},
                     {"p_adjusted", t.p_adjusted},
                     {"significant", t.significant}});
  }
  return {{"systems", systems},
          {"pairwise_tests", tests},
          {"ranking", report.ranking},
          {"ranking_time", report.ranking_time}};
}

std::string CurveCsv(const SurvivalReport& report) {
  std::string out = "system,time,survival\n";
  char buf[64];
  for (const auto& s : report.systems) {
    for (size_t i = 0; i < s.estimate.times.size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%g,%.6f\n", s.estimate.times[i],
                    s.estimate.survival[i]);
      out += s.system + buf;
    }
  }
  return out;
}

}  // namespace stb::survival
