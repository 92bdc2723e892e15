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

#include "stb/stats.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

#include <boost/math/special_functions/erf.hpp>

#include "stb/error.h"

namespace stb::stats {

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double NormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::kPrecondition, "normal quantile needs p in (0,1)");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double ChiSquare1Sf(double statistic) {
  if (statistic <= 0.0) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

double TwoSidedNormalP(double z) {
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

std::vector<double> HolmAdjust(std::span<const double> p_values) {
  const size_t m = p_values.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return p_values[a] < p_values[b];
  });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (size_t rank = 0; rank < m; ++rank) {
    const size_t idx = order[rank];
    const double scaled =
        std::min(1.0, static_cast<double>(m - rank) * p_values[idx]);
    running = std::max(running, scaled);
    adjusted[idx] = running;
  }
  return adjusted;
}

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::pair<int, int> TrimmedRange(std::vector<int> values, double tail) {
  if (values.empty()) {
    throw Error(ErrorKind::kPrecondition, "range of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const size_t drop = static_cast<size_t>(
      std::floor(tail * static_cast<double>(values.size())));
  const size_t lo = std::min(drop, values.size() - 1);
  const size_t hi = std::max(lo, values.size() - 1 - drop);
  return {values[lo], values[hi]};
}

}  // namespace stb::stats
