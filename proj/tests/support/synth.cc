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

#include "synth.h"

#include <cmath>
#include <random>

#include "stb/rng.h"

namespace stb::testing {
namespace {

std::vector<std::array<std::string, 2>> Lines(const std::string& id, size_t n) {
  std::vector<std::array<std::string, 2>> out;
  for (size_t i = 0; i < n; ++i) {
    out.push_back({id + " says line " + std::to_string(i),
                   id + " answers line " + std::to_string(i)});
  }
  return out;
}

}  // namespace

corpus::Conversation BotConversation(const std::string& id, const std::string& a,
                                     const std::string& b, size_t exchanges,
                                     const std::string& domain) {
  return corpus::MakeConversation(
      id, domain, {{{corpus::EntityKind::kBot, a}, {corpus::EntityKind::kBot, b}}},
      Lines(id, exchanges));
}

corpus::Conversation HumanConversation(const std::string& id, size_t exchanges,
                                       const std::string& domain) {
  const std::string h(corpus::kHumanSystem);
  return corpus::MakeConversation(
      id, domain, {{{corpus::EntityKind::kHuman, h}, {corpus::EntityKind::kHuman, h}}},
      Lines(id, exchanges));
}

corpus::Corpus BotCorpus(const std::vector<std::string>& systems, int per_pair,
                         size_t exchanges, std::vector<int> lengths) {
  corpus::Corpus c;
  c.domain = "dailydialog";
  c.segment_lengths = std::move(lengths);
  for (size_t i = 0; i < systems.size(); ++i) {
    for (size_t j = i + 1; j < systems.size(); ++j) {
      for (int n = 0; n < per_pair; ++n) {
        c.conversations.push_back(BotConversation(
            systems[i] + "-vs-" + systems[j] + "-" + std::to_string(n), systems[i],
            systems[j], exchanges));
      }
    }
  }
  return c;
}

corpus::Corpus HumanCorpus(int count, size_t exchanges, std::vector<int> lengths) {
  corpus::Corpus c;
  c.domain = "dailydialog";
  c.segment_lengths = std::move(lengths);
  for (int n = 0; n < count; ++n) {
    c.conversations.push_back(HumanConversation("human-" + std::to_string(n), exchanges));
  }
  return c;
}

std::vector<PairCount> DailydialogCounts() {
  return {{"GPT", "BR", 76, 114}, {"GPT", "S2", 77, 100}, {"GPT", "DR", 107, 115},
          {"BR", "S2", 77, 97},   {"BR", "DR", 100, 120}, {"S2", "DR", 72, 97}};
}

std::vector<ranking::Match> DailydialogMatches(uint64_t seed) {
  Rng rng = MakeRng(seed, 0);
  std::vector<ranking::Match> out;
  const int lengths[3] = {2, 3, 5};
  for (const PairCount& p : DailydialogCounts()) {
    // Outcomes from system i's point of view: +1 win, -1 loss, 0 tie.
    std::vector<int> outcomes;
    outcomes.insert(outcomes.end(), p.wins_i, 1);
    outcomes.insert(outcomes.end(), p.decisive - p.wins_i, -1);
    outcomes.insert(outcomes.end(), kAnnotationsPerPair - p.decisive, 0);
    Shuffle(outcomes.begin(), outcomes.end(), rng);
    size_t next = 0;
    for (int conv = 0; conv < 45; ++conv) {
      const std::string id = p.i + "-vs-" + p.j + "-" + std::to_string(conv);
      const bool i_first = conv % 2 == 0;
      for (int k : lengths) {
        for (int a = 0; a < 2; ++a) {
          const int o = outcomes[next++];
          ranking::Match m;
          m.first = i_first ? p.i : p.j;
          m.second = i_first ? p.j : p.i;
          m.conversation_id = id;
          m.k = k;
          if (o == 0) {
            m.outcome = ranking::Outcome::kTie;
          } else {
            const bool first_wins = (o > 0) == i_first;
            m.outcome = first_wins ? ranking::Outcome::kFirst : ranking::Outcome::kSecond;
          }
          out.push_back(std::move(m));
        }
      }
    }
  }
  return out;
}

std::vector<annotation::Judgment> SimulatePool(const PoolSpec& spec) {
  using annotation::Choice;
  using annotation::EntityLabel;
  Rng rng = MakeRng(spec.seed, 0);
  std::vector<annotation::Judgment> out;
  const size_t b = spec.systems.size();
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = i + 1; j < b; ++j) {
      for (int conv = 0; conv < spec.per_pair; ++conv) {
        const bool swap = conv % 2 == 1;
        const size_t s0 = swap ? j : i;
        const size_t s1 = swap ? i : j;
        const std::string id =
            spec.systems[i] + "-vs-" + spec.systems[j] + "-" + std::to_string(conv);
        for (int k : spec.lengths) {
          // Distinct workers per item.
          std::vector<int> workers(spec.workers);
          for (int w = 0; w < spec.workers; ++w) workers[w] = w;
          Shuffle(workers.begin(), workers.end(), rng);
          for (int a = 0; a < spec.annotators; ++a) {
            annotation::Judgment jd;
            jd.item_id = batching::ItemId(id, k);
            jd.worker_id = "w" + std::to_string(workers[a]);
            jd.conversation_id = id;
            jd.domain = spec.domain;
            jd.k = k;
            jd.kind = batching::ItemKind::kBotBot;
            jd.systems = {spec.systems[s0], spec.systems[s1]};
            const double h[2] = {spec.hazards[s0], spec.hazards[s1]};
            for (int slot = 0; slot < 2; ++slot) {
              const double p_spot = 1.0 - std::exp(-h[slot] * k);
              if (UniformUnit(rng) < p_spot) {
                jd.labels[slot] = EntityLabel::kBot;
              } else {
                jd.labels[slot] = UniformUnit(rng) < spec.unsure_rate ? EntityLabel::kUnsure
                                                                      : EntityLabel::kHuman;
              }
            }
            for (auto& pref : jd.preferences) {
              if (UniformUnit(rng) < 0.3) {
                pref = Choice::kTie;
              } else {
                const double p_first = h[1] / (h[0] + h[1]);
                pref = UniformUnit(rng) < p_first ? Choice::kFirst : Choice::kSecond;
              }
            }
            jd.duration_seconds = 10.0 + 30.0 * UniformUnit(rng);
            out.push_back(std::move(jd));
          }
        }
      }
    }
  }
  return out;
}

std::vector<survival::SurvivalObservation> SimulatePh(int n, double beta, double rate,
                                                      const std::vector<double>& times,
                                                      uint64_t seed) {
  Rng rng = MakeRng(seed, 0);
  std::vector<survival::SurvivalObservation> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int x = UniformUnit(rng) < 0.5 ? -1 : 1;
    const double hazard = rate * std::exp(beta * x);
    const double t = -std::log1p(-UniformUnit(rng)) / hazard;
    const double k = times[UniformIndex(rng, times.size())];
    const std::array<int, 3> cov = {x, 0, 0};
    out.push_back(t <= k ? survival::SurvivalObservation::Spotted("S", k, cov)
                         : survival::SurvivalObservation::Survived("S", k, cov));
  }
  return out;
}

}  // namespace stb::testing
