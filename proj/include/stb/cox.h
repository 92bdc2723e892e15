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

#ifndef STB_COX_H_
#define STB_COX_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stb/censoring.h"

namespace stb::survival {

// Interval-censored proportional hazards data: each row is spotted by or
// survived past its inspection time. `x` is row-major, n rows by
// names.size() columns.
struct CoxDesign {
  std::vector<std::string> names;
  std::vector<double> time;
  std::vector<bool> spotted;
  std::vector<double> x;

  size_t rows() const { return time.size(); }
  size_t cols() const { return names.size(); }
  double at(size_t row, size_t col) const { return x[row * cols() + col]; }
};

// The three feature covariates, named fluency, specificity, sensibleness.
CoxDesign FeatureDesign(std::span<const SurvivalObservation> obs);

struct CoxCoefficient {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool significant = false;
  // Constant covariates removed under CoxOptions::drop_constant.
  bool dropped = false;
};

struct CoxResult {
  std::vector<CoxCoefficient> coefficients;
  std::vector<double> times;
  // S0 at each inspection time.
  std::vector<double> baseline;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  int starts_used = 0;
  double gradient_norm = 0.0;

  const CoxCoefficient* Find(std::string_view name) const;
};

struct CoxOptions {
  int max_iterations = 1000;
  // On the max-norm of the log-likelihood gradient.
  double gradient_tolerance = 1e-8;
  int starts = 3;
  uint64_t rng_seed = 0;
  // Otherwise a constant covariate is an unidentifiable error.
  bool drop_constant = false;
  // |beta| beyond this signals separation.
  double separation_bound = 15.0;
};

// Parameter vector layout: betas (one per column) followed by one baseline
// parameter per inspection time, where S0(t_j) = prod_{l<=j} logistic(theta_l).
size_t CoxParameterCount(const CoxDesign& design);
double CoxLogLikelihood(const CoxDesign& design, std::span<const double> params);
std::vector<double> CoxGradient(const CoxDesign& design,
                                std::span<const double> params);
// Baseline survival implied by the trailing parameters.
std::vector<double> BaselineFromParams(const CoxDesign& design,
                                       std::span<const double> params);
// Optimizer parameters for a given fit (inverse of the above).
std::vector<double> ParamsFromResult(const CoxDesign& design,
                                     const CoxResult& result);

// Maximizes the interval-censored likelihood jointly over beta and baseline.
// Throws kPrecondition without both outcomes, kUnidentifiable for constant
// covariates or separation.
CoxResult FitCox(const CoxDesign& design, const CoxOptions& options = {});

}  // namespace stb::survival

#endif  // STB_COX_H_
