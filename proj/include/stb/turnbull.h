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

#ifndef STB_TURNBULL_H_
#define STB_TURNBULL_H_

#include <span>
#include <vector>

#include "stb/censoring.h"

namespace stb::survival {

struct SupportInterval {
  double left = 0.0;
  double right = kInfinity;
  double mass = 0.0;
};

struct TurnbullEstimate {
  // (0,k1], (k1,k2], ..., (km, inf).
  std::vector<SupportInterval> intervals;
  std::vector<double> times;
  // S(t) at each entry of `times`.
  std::vector<double> survival;
  int iterations = 0;
  bool converged = false;
  // Largest mass change in the final iteration.
  double residual = 0.0;
  double log_likelihood = 0.0;
};

struct TurnbullOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

// Self-consistency (EM) NPMLE for observations of the form (0,k] and (k,inf).
// A hit iteration cap leaves converged == false with the residual set.
TurnbullEstimate TurnbullFit(std::span<const SurvivalObservation> obs,
                             const TurnbullOptions& options = {});

// Throws kPrecondition unless t is one of the fitted inspection times.
double SurvivalAt(const TurnbullEstimate& estimate, double t);

}  // namespace stb::survival

#endif  // STB_TURNBULL_H_
