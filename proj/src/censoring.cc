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

#include "stb/censoring.h"

#include <algorithm>

namespace stb::survival {

std::vector<SurvivalObservation> EncodeObservations(
    std::span<const annotation::Judgment> judgments) {
  std::vector<SurvivalObservation> out;
  out.reserve(judgments.size() * 2);
  for (const auto& j : judgments) {
    if (!j.is_bot_bot()) continue;
    for (int slot = 0; slot < 2; ++slot) {
      std::array<int, 3> x{};
      for (annotation::Feature f : annotation::kFeatures) {
        x[static_cast<size_t>(f)] = annotation::EncodeFeature(j.preference(f), slot);
      }
      const double k = j.k;
      if (j.labels[slot] == annotation::EntityLabel::kBot) {
        out.push_back(SurvivalObservation::Spotted(j.systems[slot], k, x));
      } else {
        out.push_back(SurvivalObservation::Survived(j.systems[slot], k, x));
      }
    }
  }
  return out;
}

std::vector<SurvivalObservation> EncodeObservations(
    std::span<const annotation::AnnotationRecord> records,
    const batching::Plan& plan) {
  const auto judgments = annotation::Resolve(records, plan);
  return EncodeObservations(judgments);
}

std::vector<double> InspectionTimes(std::span<const SurvivalObservation> obs) {
  std::vector<double> times;
  times.reserve(obs.size());
  for (const auto& o : obs) times.push_back(o.time());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

}  // namespace stb::survival
