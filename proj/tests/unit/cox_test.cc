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

#include <cmath>

#include "gtest/gtest.h"
#include "stb/error.h"
#include "stb/rng.h"
#include "stb/turnbull.h"
#include "synth.h"

namespace stb::survival {
namespace {

// One-column design from the first covariate.
CoxDesign SingleColumn(std::span<const SurvivalObservation> obs) {
  CoxDesign d;
  d.names = {"x"};
  for (const auto& o : obs) {
    d.time.push_back(o.time());
    d.spotted.push_back(o.spotted());
    d.x.push_back(o.covariates[0]);
  }
  return d;
}

std::vector<double> NumericGradient(const CoxDesign& d, std::vector<double> params) {
  const double h = 1e-5;
  std::vector<double> g(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = CoxLogLikelihood(d, params);
    params[i] = keep - h;
    const double down = CoxLogLikelihood(d, params);
    params[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double Norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvariant;
}

TEST(CoxTest, ConstantCovariateIsUnidentifiable) {
  const auto obs = testing::SimulatePh(300, 0.5, 0.3, {1, 2, 3, 5}, 1);
  const auto design = FeatureDesign(obs);
  ASSERT_EQ(design.cols(), 3u);
  try {
    FitCox(design);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnidentifiable);
    EXPECT_NE(std::string(e.what()).find("specificity"), std::string::npos) << e.what();
  }
  CoxOptions options;
  options.drop_constant = true;
  const auto fit = FitCox(design, options);
  EXPECT_FALSE(fit.Find("fluency")->dropped);
  EXPECT_TRUE(fit.Find("specificity")->dropped);
  EXPECT_TRUE(fit.Find("sensibleness")->dropped);
  EXPECT_EQ(fit.Find("sensibleness")->p_value, 1.0);
  EXPECT_FALSE(fit.Find("sensibleness")->significant);
}

TEST(CoxTest, NeedsBothOutcomes) {
  std::vector<SurvivalObservation> obs = {SurvivalObservation::Spotted("S", 2, {1, 0, 0}),
                                          SurvivalObservation::Spotted("S", 3, {-1, 0, 0})};
  EXPECT_EQ(KindOf([&] { FitCox(SingleColumn(obs)); }), ErrorKind::kPrecondition);
}

TEST(CoxTest, GradientMatchesFiniteDifferences) {
  const auto obs = testing::SimulatePh(400, 0.7, 0.4, {1, 2, 3, 5}, 2);
  const auto design = SingleColumn(obs);
  ASSERT_EQ(CoxParameterCount(design), 5u);
  Rng rng = MakeRng(2, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> params(5);
    for (double& p : params) p = 4 * UniformUnit(rng) - 2;
    const auto analytic = CoxGradient(design, params);
    const auto numeric = NumericGradient(design, params);
    for (size_t i = 0; i < params.size(); ++i) {
      EXPECT_NEAR(analytic[i], numeric[i], 1e-4 * (1 + std::abs(numeric[i])));
    }
  }
}

TEST(CoxTest, RecoversTrueCoefficient) {
  const auto obs = testing::SimulatePh(5000, 1.0, 0.3, {1, 2, 3, 5}, 7);
  const auto design = SingleColumn(obs);
  const auto fit = FitCox(design);
  EXPECT_TRUE(fit.converged);
  const auto* b = fit.Find("x");
  EXPECT_GE(b->beta, 0.85);
  EXPECT_LE(b->beta, 1.15);
  EXPECT_TRUE(b->significant);
  EXPECT_GT(b->se, 0);
  EXPECT_NEAR(b->z, b->beta / b->se, 1e-12);
  const auto params = ParamsFromResult(design, fit);
  EXPECT_LT(Norm(NumericGradient(design, params)), 1e-4);
  EXPECT_NEAR(CoxLogLikelihood(design, params), fit.log_likelihood, 1e-9);
  double last = 1.0;
  for (double s : fit.baseline) {
    EXPECT_LE(s, last);
    EXPECT_GT(s, 0);
    last = s;
  }
}

TEST(CoxTest, ZeroCovariatesReproduceTurnbull) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto obs = testing::SimulatePh(600, 0.8, 0.3, {1, 2, 3, 5}, 10 + seed);
    for (auto& o : obs) o.covariates = {0, 0, 0};
    const auto km = TurnbullFit(obs);
    if (!km.converged) continue;
    CoxDesign design = SingleColumn(obs);
    design.names.clear();
    design.x.clear();
    const auto fit = FitCox(design);
    ASSERT_EQ(fit.times, km.times);
    for (size_t j = 0; j < km.times.size(); ++j) {
      EXPECT_NEAR(fit.baseline[j], km.survival[j], 1e-6) << seed;
    }
  }
}

TEST(CoxTest, SeparationIsUnidentifiable) {
  std::vector<SurvivalObservation> obs;
  for (int i = 0; i < 30; ++i) {
    obs.push_back(SurvivalObservation::Spotted("S", 1 + i % 3, {1, 0, 0}));
    obs.push_back(SurvivalObservation::Survived("S", 1 + i % 3, {-1, 0, 0}));
  }
  EXPECT_EQ(KindOf([&] { FitCox(SingleColumn(obs)); }), ErrorKind::kUnidentifiable);
}

TEST(CoxTest, NullDataRarelySignificant) {
  int hits = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = MakeRng(seed, 21);
    std::vector<SurvivalObservation> obs;
    for (int i = 0; i < 2000; ++i) {
      const std::array<int, 3> x = {static_cast<int>(UniformIndex(rng, 3)) - 1,
                                    static_cast<int>(UniformIndex(rng, 3)) - 1,
                                    static_cast<int>(UniformIndex(rng, 3)) - 1};
      const double k = std::array{2.0, 3.0, 5.0}[UniformIndex(rng, 3)];
      const bool spotted = UniformUnit(rng) < 1 - std::exp(-0.2 * k);
      obs.push_back(spotted ? SurvivalObservation::Spotted("S", k, x)
                            : SurvivalObservation::Survived("S", k, x));
    }
    const auto fit = FitCox(FeatureDesign(obs));
    for (const auto& c : fit.coefficients) hits += c.significant;
  }
  // 30 tests at level 0.05; 6 or more has probability below 0.02.
  EXPECT_LE(hits, 5);
}

TEST(CoxTest, Deterministic) {
  const auto obs = testing::SimulatePh(500, 0.5, 0.3, {2, 3, 5}, 3);
  const auto a = FitCox(SingleColumn(obs));
  const auto b = FitCox(SingleColumn(obs));
  EXPECT_EQ(a.coefficients[0].beta, b.coefficients[0].beta);
  EXPECT_EQ(a.baseline, b.baseline);
}

}  // namespace
}  // namespace stb::survival
