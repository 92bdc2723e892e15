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

#ifndef STB_CENSORING_H_
#define STB_CENSORING_H_

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stb/annotation.h"
#include "stb/batching.h"

namespace stb::survival {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// One entity's exposure in one annotated segment. Spotted entities carry the
// interval (0, k]; survivors are right-censored at (k, inf).
struct SurvivalObservation {
  std::string system;
  double left = 0.0;
  double right = kInfinity;
  // fluency, specificity, sensibleness; each in {-1, 0, 1}.
  std::array<int, 3> covariates = {0, 0, 0};

  bool spotted() const { return std::isfinite(right); }
  // The inspection time k.
  double time() const { return spotted() ? right : left; }

  static SurvivalObservation Spotted(std::string system, double k,
                                     std::array<int, 3> x = {0, 0, 0}) {
    return {std::move(system), 0.0, k, x};
  }
  static SurvivalObservation Survived(std::string system, double k,
                                      std::array<int, 3> x = {0, 0, 0}) {
    return {std::move(system), k, kInfinity, x};
  }
};

// Two observations per bot-bot judgment; human-human judgments are skipped.
// "bot" means spotted, "unsure" and "human" mean survived.
std::vector<SurvivalObservation> EncodeObservations(
    std::span<const annotation::Judgment> judgments);
std::vector<SurvivalObservation> EncodeObservations(
    std::span<const annotation::AnnotationRecord> records,
    const batching::Plan& plan);

// Distinct inspection times, ascending.
std::vector<double> InspectionTimes(std::span<const SurvivalObservation> obs);

}  // namespace stb::survival

#endif  // STB_CENSORING_H_
