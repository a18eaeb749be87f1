// Copyright 2026 The mvcjack Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mvcjack/sim_harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "test_oracles.hpp"

namespace mvcjack {
namespace {

double mean_of(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(v.size() - 1);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::stream(1, 100, 0);
  Rng b = Rng::stream(1, 100, 0);
  Rng c = Rng::stream(1, 100, 1);
  Rng d = Rng::stream(1, 101, 0);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, d.uniform());
  }
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng r(6);
  std::vector<double> v(400000);
  for (double& x : v) x = r.normal();
  EXPECT_NEAR(mean_of(v), 0.0, 0.01);
  EXPECT_NEAR(variance_of(v), 1.0, 0.01);
}

TEST(Rng, GammaMean) {
  Rng r(7);
  for (double shape : {0.5, 1.0, 7.0}) {
    std::vector<double> v(200000);
    for (double& x : v) x = r.gamma(shape);
    EXPECT_NEAR(mean_of(v), shape, 0.02 * shape + 0.01);
    EXPECT_NEAR(variance_of(v), shape, 0.05 * shape + 0.01);
  }
}

TEST(ErrorModels, NormalVariance) {
  Rng r(8);
  const ErrorModel m = experiment1().error;
  std::vector<double> v(400000);
  for (double& x : v) x = m.draw(r);
  EXPECT_NEAR(mean_of(v), 0.0, 0.005);
  EXPECT_NEAR(variance_of(v), 0.25, 0.005);
}

TEST(ErrorModels, StudentVariance) {
  Rng r(9);
  const ErrorModel m = experiment3().error;
  std::vector<double> v(1000000);
  for (double& x : v) x = m.draw(r);
  EXPECT_NEAR(variance_of(v), 14.0 / 12.0, 0.01);
  EXPECT_NEAR(mean_of(v), 0.0, 0.005);
}

TEST(ErrorModels, StudentApproachesNormal) {
  Rng r(10);
  std::vector<double> v(50000);
  for (double& x : v) x = student_t_sample(1000.0, 1.0, r);
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = static_cast<double>(testing::normal_cdf_oracle(v[i]));
    ks = std::max({ks, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  EXPECT_LT(ks, 0.01);
}

TEST(Samples, NoiselessPointsLieOnComponentLines) {
  ExperimentConfig cfg = experiment1();
  cfg.error.variance = 0.0;
  cfg.n = 200;
  const PairedSample s = gen_sample(cfg, 0);
  ASSERT_EQ(s.n(), 200);
  int on_first = 0;
  for (Index j = 0; j < s.n(); ++j) {
    const double r1 = s.y(j) - (0.5 + 2.0 * s.x(j));
    const double r2 = s.y(j) - (-0.5 - s.x(j) / 3.0);
    EXPECT_LT(std::min(std::abs(r1), std::abs(r2)), 1e-12);
    on_first += std::abs(r1) < 1e-12;
    EXPECT_DOUBLE_EQ(s.concentrations.probs()(j, 0), (j + 1) / 200.0);
  }
  // Expected count sum_j j/n = (n + 1)/2.
  EXPECT_NEAR(on_first, 100.5, 30);
}

TEST(Samples, Deterministic) {
  const ExperimentConfig cfg = experiment3();
  const PairedSample a = gen_sample(cfg, 17);
  const PairedSample b = gen_sample(cfg, 17);
  const PairedSample c = gen_sample(cfg, 18);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, c.x);
}

TEST(Config, Validation) {
  auto expect_config_error = [](ExperimentConfig cfg) {
    try {
      validate(cfg);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
  };
  ExperimentConfig cfg = experiment1();
  EXPECT_NO_THROW(validate(cfg));
  cfg.n = 5;
  expect_config_error(cfg);
  cfg = experiment1();
  cfg.replications = 0;
  expect_config_error(cfg);
  cfg = experiment1();
  cfg.alpha = 1.0;
  expect_config_error(cfg);
  cfg = experiment1();
  cfg.components[1].x_var = 0.0;
  expect_config_error(cfg);
  cfg = experiment1();
  cfg.error.variance = -1.0;
  expect_config_error(cfg);
  cfg = experiment3();
  cfg.error.df = 4.0;
  expect_config_error(cfg);
  EXPECT_THROW(preset("exp4"), Error);
}

TEST(Presets, TrueCoefficients) {
  for (const char* name : {"exp1", "exp2", "exp3"}) {
    const ExperimentConfig cfg = preset(name);
    EXPECT_EQ(cfg.components[0].b0, 0.5);
    EXPECT_EQ(cfg.components[0].b1, 2.0);
    EXPECT_EQ(cfg.components[1].b0, -0.5);
    EXPECT_EQ(cfg.components[1].b1, -1.0 / 3.0);
    EXPECT_EQ(cfg.components[0].x_var, 2.0);
    EXPECT_EQ(cfg.components[1].x_mean, 1.0);
  }
  EXPECT_EQ(experiment2().error.variance, 2.0);
  EXPECT_EQ(experiment3().error.kind, ErrorDistribution::StudentT);
}

TEST(Experiment, SingleReplicateSmoke) {
  ExperimentConfig cfg = experiment1();
  cfg.n = 100;
  cfg.replications = 1;
  const CoverageReport r = run_experiment(cfg);
  EXPECT_EQ(r.replications, 1);
  for (const auto& c : r.components) {
    EXPECT_EQ(c.failures + c.effective, 1);
    if (c.effective == 1) {
      EXPECT_GE(c.b0(), 0.0);
      EXPECT_LE(c.joint(), 1.0);
    }
  }
}

TEST(Experiment, ThreadCountDoesNotMatter) {
  ExperimentConfig cfg = experiment2();
  cfg.n = 150;
  cfg.replications = 40;
  const CoverageReport a = run_experiment(cfg, 1);
  const CoverageReport b = run_experiment(cfg, 4);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(a.components[k].covered_b0, b.components[k].covered_b0);
    EXPECT_EQ(a.components[k].covered_b1, b.components[k].covered_b1);
    EXPECT_EQ(a.components[k].covered_joint, b.components[k].covered_joint);
    EXPECT_EQ(a.components[k].failures, b.components[k].failures);
  }
}

TEST(Experiment, FrequencyUndefinedWithoutSuccesses) {
  ComponentCoverage c;
  c.failures = 3;
  EXPECT_TRUE(std::isnan(c.b0()));
  EXPECT_TRUE(std::isnan(c.joint()));
}

}  // namespace
}  // namespace mvcjack
