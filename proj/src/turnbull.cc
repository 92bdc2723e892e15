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

#include "stb/turnbull.h"

#include <algorithm>
#include <cmath>

#include "stb/error.h"

namespace stb::survival {

TurnbullEstimate TurnbullFit(std::span<const SurvivalObservation> obs,
                             const TurnbullOptions& options) {
  if (obs.empty()) {
    throw Error(ErrorKind::kPrecondition, "Turnbull fit needs observations");
  }
  TurnbullEstimate est;
  est.times = InspectionTimes(obs);
  const size_t m = est.times.size();
  const size_t support = m + 1;

  // All observations with the same (time, spotted) share a likelihood term,
  // so iterate over counts instead of individual rows.
  std::vector<double> spotted(m, 0.0);
  std::vector<double> survived(m, 0.0);
  for (const auto& o : obs) {
    const size_t j =
        std::lower_bound(est.times.begin(), est.times.end(), o.time()) -
        est.times.begin();
    (o.spotted() ? spotted : survived)[j] += 1.0;
  }
  const double n = static_cast<double>(obs.size());

  // Only innermost intervals can carry mass: the left end must be 0 or a
  // censoring time and the right end a spotting time (or infinity).
  std::vector<double> p(support, 0.0);
  bool any_survived = false;
  for (double s : survived) any_survived |= s > 0;
  size_t innermost = 0;
  for (size_t l = 0; l < support; ++l) {
    const bool left_ok = l == 0 || survived[l - 1] > 0;
    const bool right_ok = l < m ? spotted[l] > 0 : any_survived;
    if (left_ok && right_ok) {
      p[l] = 1.0;
      ++innermost;
    }
  }
  for (double& x : p) x /= static_cast<double>(innermost);
  std::vector<double> next(support);
  std::vector<double> cdf(support);
  auto cumulate = [&] {
    double acc = 0.0;
    for (size_t j = 0; j < support; ++j) cdf[j] = (acc += p[j]);
  };

  // EM step: p[l] <- p[l] * d[l].
  std::vector<double> d(support);
  auto multipliers = [&] {
    cumulate();
    const double total = cdf[support - 1];
    std::vector<double> head_weight(support, 0.0);
    std::vector<double> tail_weight(support + 1, 0.0);
    for (size_t j = 0; j < m; ++j) {
      if (spotted[j] > 0 && cdf[j] > 0) head_weight[j] += spotted[j] / cdf[j];
      const double above = total - cdf[j];
      if (survived[j] > 0 && above > 0) tail_weight[j + 1] += survived[j] / above;
    }
    // Interval l collects head weight from every j >= l and tail weight
    // from every j + 1 <= l.
    double head = 0.0;
    for (size_t l = support; l-- > 0;) d[l] = (head += head_weight[l]);
    double tail = 0.0;
    for (size_t l = 0; l < support; ++l) d[l] = (d[l] + (tail += tail_weight[l])) / n;
  };

  for (est.iterations = 0; est.iterations < options.max_iterations;) {
    multipliers();
    double change = 0.0;
    for (size_t l = 0; l < support; ++l) {
      next[l] = p[l] * d[l];
      change = std::max(change, std::abs(next[l] - p[l]));
    }
    p.swap(next);
    ++est.iterations;
    est.residual = change;
    if (change < options.tolerance) {
      est.converged = true;
      break;
    }
  }

  cumulate();
  est.intervals.reserve(support);
  double left = 0.0;
  for (size_t l = 0; l < support; ++l) {
    const double right = l < m ? est.times[l] : kInfinity;
    est.intervals.push_back({left, right, p[l]});
    left = right;
  }
  est.survival.resize(m);
  est.log_likelihood = 0.0;
  for (size_t j = 0; j < m; ++j) {
    est.survival[j] = std::clamp(1.0 - cdf[j], 0.0, 1.0);
    if (spotted[j] > 0) est.log_likelihood += spotted[j] * std::log(cdf[j]);
    if (survived[j] > 0) est.log_likelihood += survived[j] * std::log(est.survival[j]);
  }
  return est;
}

double SurvivalAt(const TurnbullEstimate& estimate, double t) {
  const auto it = std::find(estimate.times.begin(), estimate.times.end(), t);
  if (it == estimate.times.end()) {
    throw Error(ErrorKind::kPrecondition,
                "survival at t=" + std::to_string(t) +
                    " is not identified; t is not an inspection time");
  }
  return estimate.survival[it - estimate.times.begin()];
}

}  // namespace stb::survival
