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

#include "stb/cox.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include <Eigen/Dense>

#include "stb/error.h"
#include "stb/rng.h"
#include "stb/stats.h"
#include "stb/turnbull.h"

namespace stb::survival {
namespace {

// Baseline parameters this far out are at the edge of the parameter space
// (a ratio S0(t_j)/S0(t_{j-1}) of 0 or 1) and carry no curvature.
constexpr double kBoundaryTheta = 12.0;

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Rows sharing (time, outcome, covariates) contribute identical terms, so
// the likelihood runs over weighted patterns.
struct Pattern {
  size_t time_index = 0;
  bool spotted = false;
  double weight = 0.0;
  std::vector<double> x;

  auto operator<=>(const Pattern&) const = default;
};

struct Prepared {
  const CoxDesign* design = nullptr;
  std::vector<double> times;
  std::vector<Pattern> patterns;
  size_t p = 0;
  size_t m = 0;
};

Prepared Prepare(const CoxDesign& design) {
  Prepared prep;
  prep.design = &design;
  prep.times = design.time;
  std::sort(prep.times.begin(), prep.times.end());
  prep.times.erase(std::unique(prep.times.begin(), prep.times.end()),
                   prep.times.end());
  prep.p = design.cols();
  prep.m = prep.times.size();
  std::map<std::tuple<size_t, bool, std::vector<double>>, double> counts;
  for (size_t i = 0; i < design.rows(); ++i) {
    const size_t j =
        std::lower_bound(prep.times.begin(), prep.times.end(), design.time[i]) -
        prep.times.begin();
    std::vector<double> x(design.x.begin() + i * prep.p,
                          design.x.begin() + (i + 1) * prep.p);
    counts[{j, design.spotted[i], std::move(x)}] += 1.0;
  }
  prep.patterns.reserve(counts.size());
  for (auto& [key, weight] : counts) {
    prep.patterns.push_back({std::get<0>(key), std::get<1>(key), weight, std::get<2>(key)});
  }
  return prep;
}

// log S0 at each inspection time.
std::vector<double> LogBaseline(const Prepared& prep, std::span<const double> params) {
  std::vector<double> log_s(prep.m);
  double acc = 0.0;
  for (size_t l = 0; l < prep.m; ++l) {
    acc -= Softplus(-params[prep.p + l]);
    log_s[l] = acc;
  }
  return log_s;
}

double Eta(const Prepared& prep, std::span<const double> params, const Pattern& row) {
  double eta = 0.0;
  for (size_t k = 0; k < prep.p; ++k) eta += params[k] * row.x[k];
  return eta;
}

double LogLik(const Prepared& prep, std::span<const double> params) {
  const auto log_s = LogBaseline(prep, params);
  double ll = 0.0;
  for (const Pattern& row : prep.patterns) {
    const double u = std::exp(Eta(prep, params, row)) * log_s[row.time_index];
    ll += row.weight * (row.spotted ? std::log(-std::expm1(u)) : u);
  }
  return ll;
}

std::vector<double> Gradient(const Prepared& prep, std::span<const double> params) {
  const auto log_s = LogBaseline(prep, params);
  std::vector<double> grad(prep.p + prep.m, 0.0);
  std::vector<double> per_time(prep.m, 0.0);
  for (const Pattern& row : prep.patterns) {
    const double e = std::exp(Eta(prep, params, row));
    const double u = e * log_s[row.time_index];
    const double dll_du = row.weight * (row.spotted ? -1.0 / std::expm1(-u) : 1.0);
    for (size_t k = 0; k < prep.p; ++k) grad[k] += dll_du * u * row.x[k];
    per_time[row.time_index] += dll_du * e;
  }
  double suffix = 0.0;
  for (size_t l = prep.m; l-- > 0;) {
    suffix += per_time[l];
    grad[prep.p + l] = suffix * Logistic(-params[prep.p + l]);
  }
  return grad;
}

double MaxAbs(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

bool Finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::vector<size_t> InteriorIndices(const Prepared& prep, std::span<const double> params) {
  std::vector<size_t> idx;
  for (size_t k = 0; k < prep.p; ++k) idx.push_back(k);
  for (size_t l = 0; l < prep.m; ++l) {
    if (std::abs(params[prep.p + l]) <= kBoundaryTheta) idx.push_back(prep.p + l);
  }
  return idx;
}

// Hessian of the log-likelihood over `idx` by central differences of the
// analytic gradient.
Eigen::MatrixXd NumericHessian(const Prepared& prep, std::vector<double> params,
                               const std::vector<size_t>& idx) {
  constexpr double kStep = 1e-5;
  const size_t q = idx.size();
  Eigen::MatrixXd h(q, q);
  for (size_t a = 0; a < q; ++a) {
    const double saved = params[idx[a]];
    params[idx[a]] = saved + kStep;
    const auto gp = Gradient(prep, params);
    params[idx[a]] = saved - kStep;
    const auto gm = Gradient(prep, params);
    params[idx[a]] = saved;
    for (size_t b = 0; b < q; ++b) {
      h(b, a) = (gp[idx[b]] - gm[idx[b]]) / (2.0 * kStep);
    }
  }
  return 0.5 * (h + h.transpose());
}

struct RunResult {
  std::vector<double> params;
  double ll = -std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

RunResult Maximize(const Prepared& prep, std::vector<double> x,
                   const CoxOptions& options) {
  const size_t n = x.size();
  RunResult run;
  double f = -LogLik(prep, x);
  if (!std::isfinite(f)) return run;
  std::vector<double> g = Gradient(prep, x);
  for (double& v : g) v = -v;
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  int it = 0;
  for (; it < options.max_iterations && MaxAbs(g) >= options.gradient_tolerance; ++it) {
    Eigen::VectorXd gv = Eigen::Map<Eigen::VectorXd>(g.data(), n);
    Eigen::VectorXd d = -hinv * gv;
    if (d.dot(gv) >= 0) {
      hinv.setIdentity();
      d = -gv;
    }
    double alpha = scaled ? 1.0 : std::min(1.0, 1.0 / std::max(1.0, MaxAbs(g)));
    const double slope = d.dot(gv);
    std::vector<double> xn(n);
    double fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (size_t i = 0; i < n; ++i) xn[i] = x[i] + alpha * d[i];
      fn = -LogLik(prep, xn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> gn = Gradient(prep, xn);
    for (double& v : gn) v = -v;
    if (!Finite(gn)) break;
    Eigen::VectorXd s(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv *= sy / y.dot(y);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    x.swap(xn);
    g.swap(gn);
    f = fn;
  }

  // Newton polish on the interior parameters. Near the optimum the
  // objective is flat to rounding, so steps are judged by the gradient.
  for (int polish = 0; polish < 20 && MaxAbs(g) >= options.gradient_tolerance;
       ++polish, ++it) {
    const auto idx = InteriorIndices(prep, x);
    if (idx.empty()) break;
    const Eigen::MatrixXd info = -NumericHessian(prep, x, idx);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    Eigen::VectorXd score(idx.size());
    for (size_t a = 0; a < idx.size(); ++a) score[a] = -g[idx[a]];
    const Eigen::VectorXd step = ldlt.solve(score);
    const double before = MaxAbs(g);
    bool improved = false;
    for (double alpha = 1.0; alpha > 1e-4; alpha *= 0.5) {
      std::vector<double> xn = x;
      for (size_t a = 0; a < idx.size(); ++a) xn[idx[a]] += alpha * step[a];
      std::vector<double> gn = Gradient(prep, xn);
      for (double& v : gn) v = -v;
      const double fn = -LogLik(prep, xn);
      if (Finite(gn) && std::isfinite(fn) && MaxAbs(gn) < before &&
          fn <= f + 1e-9 * std::max(1.0, std::abs(f))) {
        x.swap(xn);
        g.swap(gn);
        f = fn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  run.params = std::move(x);
  run.ll = -f;
  run.grad_norm = MaxAbs(g);
  run.iterations = it;
  run.converged = run.grad_norm < options.gradient_tolerance;
  return run;
}

std::vector<double> TurnbullStart(const Prepared& prep) {
  std::vector<SurvivalObservation> obs;
  obs.reserve(prep.design->rows());
  for (size_t i = 0; i < prep.design->rows(); ++i) {
    const double t = prep.design->time[i];
    obs.push_back(prep.design->spotted[i] ? SurvivalObservation::Spotted("", t)
                                          : SurvivalObservation::Survived("", t));
  }
  const auto est = TurnbullFit(obs);
  std::vector<double> params(prep.p + prep.m, 0.0);
  double prev = 1.0;
  for (size_t l = 0; l < prep.m; ++l) {
    const double s = est.survival[l];
    double ratio = prev > 0 ? s / prev : 0.5;
    ratio = std::clamp(ratio, 1e-4, 1.0 - 1e-4);
    params[prep.p + l] = std::log(ratio / (1.0 - ratio));
    prev = s;
  }
  return params;
}

}  // namespace

const CoxCoefficient* CoxResult::Find(std::string_view name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

CoxDesign FeatureDesign(std::span<const SurvivalObservation> obs) {
  CoxDesign d;
  for (annotation::Feature f : annotation::kFeatures) {
    d.names.emplace_back(annotation::FeatureName(f));
  }
  d.time.reserve(obs.size());
  d.x.reserve(obs.size() * 3);
  for (const auto& o : obs) {
    d.time.push_back(o.time());
    d.spotted.push_back(o.spotted());
    for (int v : o.covariates) d.x.push_back(v);
  }
  return d;
}

size_t CoxParameterCount(const CoxDesign& design) {
  const Prepared prep = Prepare(design);
  return prep.p + prep.m;
}

double CoxLogLikelihood(const CoxDesign& design, std::span<const double> params) {
  const Prepared prep = Prepare(design);
  if (params.size() != prep.p + prep.m) {
    throw Error(ErrorKind::kPrecondition, "wrong Cox parameter count");
  }
  return LogLik(prep, params);
}

std::vector<double> CoxGradient(const CoxDesign& design,
                                std::span<const double> params) {
  const Prepared prep = Prepare(design);
  if (params.size() != prep.p + prep.m) {
    throw Error(ErrorKind::kPrecondition, "wrong Cox parameter count");
  }
  return Gradient(prep, params);
}

std::vector<double> BaselineFromParams(const CoxDesign& design,
                                       std::span<const double> params) {
  const Prepared prep = Prepare(design);
  auto log_s = LogBaseline(prep, params);
  for (double& v : log_s) v = std::exp(v);
  return log_s;
}

std::vector<double> ParamsFromResult(const CoxDesign& design,
                                     const CoxResult& result) {
  const Prepared prep = Prepare(design);
  std::vector<double> params;
  for (const auto& c : result.coefficients) {
    if (!c.dropped) params.push_back(c.beta);
  }
  if (params.size() != prep.p || result.baseline.size() != prep.m) {
    throw Error(ErrorKind::kPrecondition, "fit does not match design");
  }
  double prev = 1.0;
  for (double s : result.baseline) {
    const double ratio = s / prev;
    params.push_back(std::log(ratio) - std::log1p(-ratio));
    prev = s;
  }
  return params;
}

CoxResult FitCox(const CoxDesign& input, const CoxOptions& options) {
  const size_t n = input.rows();
  if (input.spotted.size() != n || input.x.size() != n * input.cols()) {
    throw Error(ErrorKind::kPrecondition, "inconsistent Cox design");
  }
  const size_t n_spotted = std::count(input.spotted.begin(), input.spotted.end(), true);
  if (n_spotted == 0 || n_spotted == n) {
    throw Error(ErrorKind::kPrecondition,
                "Cox fit needs at least one spotted and one survived observation");
  }

  // Constant columns are confounded with the baseline.
  std::vector<bool> keep(input.cols(), true);
  for (size_t k = 0; k < input.cols(); ++k) {
    bool constant = true;
    for (size_t i = 1; i < n && constant; ++i) {
      constant = input.at(i, k) == input.at(0, k);
    }
    if (!constant) continue;
    if (!options.drop_constant) {
      throw Error(ErrorKind::kUnidentifiable,
                  "covariate " + input.names[k] + " is constant");
    }
    keep[k] = false;
  }
  CoxDesign design;
  design.time = input.time;
  design.spotted = input.spotted;
  for (size_t k = 0; k < input.cols(); ++k) {
    if (keep[k]) design.names.push_back(input.names[k]);
  }
  design.x.reserve(n * design.names.size());
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < input.cols(); ++k) {
      if (keep[k]) design.x.push_back(input.at(i, k));
    }
  }

  const Prepared prep = Prepare(design);
  const auto base = TurnbullStart(prep);
  Rng rng = MakeRng(options.rng_seed, 0);
  std::normal_distribution<double> jitter(0.0, 0.5);

  RunResult best;
  int starts_used = 0;
  for (int s = 0; s < std::max(1, options.starts); ++s) {
    std::vector<double> start = base;
    if (s == 1) {
      for (size_t l = 0; l < prep.m; ++l) start[prep.p + l] = 0.0;
    } else if (s >= 2) {
      for (size_t k = 0; k < prep.p; ++k) start[k] = jitter(rng);
    }
    RunResult run = Maximize(prep, std::move(start), options);
    ++starts_used;
    if (run.ll > best.ll || best.params.empty()) best = std::move(run);
    if (best.converged) break;
  }
  if (best.params.empty()) {
    throw Error(ErrorKind::kConvergence, "Cox likelihood is not finite at any start");
  }

  for (size_t k = 0; k < prep.p; ++k) {
    if (std::abs(best.params[k]) > options.separation_bound) {
      throw Error(ErrorKind::kUnidentifiable,
                  "covariate " + design.names[k] +
                      " separates the outcomes (beta diverges)");
    }
  }

  CoxResult result;
  result.times = prep.times;
  result.baseline = BaselineFromParams(design, best.params);
  result.log_likelihood = best.ll;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.starts_used = starts_used;
  result.gradient_norm = best.grad_norm;

  std::vector<double> se(prep.p, 0.0);
  if (prep.p > 0) {
    const auto idx = InteriorIndices(prep, best.params);
    const Eigen::MatrixXd info = -NumericHessian(prep, best.params, idx);
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kUnidentifiable,
                  "observed information is not positive definite");
    }
    const Eigen::MatrixXd cov =
        llt.solve(Eigen::MatrixXd::Identity(idx.size(), idx.size()));
    for (size_t k = 0; k < prep.p; ++k) se[k] = std::sqrt(std::max(0.0, cov(k, k)));
  }

  size_t col = 0;
  for (size_t k = 0; k < input.cols(); ++k) {
    CoxCoefficient c;
    c.name = input.names[k];
    if (!keep[k]) {
      c.dropped = true;
    } else {
      c.beta = best.params[col];
      c.se = se[col];
      c.z = c.se > 0 ? c.beta / c.se : 0.0;
      c.p_value = c.se > 0 ? stats::TwoSidedNormalP(c.z) : 1.0;
      c.significant = c.p_value < 0.05;
      ++col;
    }
    result.coefficients.push_back(std::move(c));
  }
  return result;
}

}  // namespace stb::survival
