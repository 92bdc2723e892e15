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

#ifndef STB_STATS_H_
#define STB_STATS_H_

#include <span>
#include <vector>

// Small numeric helpers shared by the ranking, survival and analysis code.
namespace stb::stats {

double NormalPdf(double x);
double NormalCdf(double x);
double NormalQuantile(double p);

// Upper tail of the chi-square distribution with one degree of freedom.
double ChiSquare1Sf(double statistic);

// Two-sided p-value of a standard normal z score.
double TwoSidedNormalP(double z);

// Holm step-down adjustment; output is in input order.
std::vector<double> HolmAdjust(std::span<const double> p_values);

double Mean(std::span<const double> values);
double Median(std::vector<double> values);

// Order statistic used for bootstrap intervals: sorts `values` and drops
// floor(tail * n) observations from each end, returning {min, max} of the
// remainder.
std::pair<int, int> TrimmedRange(std::vector<int> values, double tail);

}  // namespace stb::stats

#endif  // STB_STATS_H_
