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

// Monte Carlo coverage study for the two-component errors-in-variables
// mixture. Observation j (1-based) belongs to component 1 with probability
// j/n and to component 2 otherwise; the fitted confidence sets are checked
// against the configured true coefficients.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mvcjack/eiv_regression.hpp"
#include "mvcjack/error.hpp"
#include "mvcjack/inference.hpp"
#include "mvcjack/parallel.hpp"

namespace mvcjack {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// 64-bit Mersenne Twister with distribution code written out here, so draws
/// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for a (master seed, sample size, replicate) triple.
  static Rng stream(std::uint64_t seed, std::uint64_t n,
                    std::uint64_t replicate) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ n);
    h = splitmix64(h ^ replicate);
    return Rng(h);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal, Marsaglia polar method (second variate discarded).
  double normal() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u;
      do {
        u = uniform();
      } while (u == 0.0);
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z;
      double v;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) {
        return d * v;
      }
    }
  }

  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

 private:
  std::mt19937_64 engine_;
};

/// scale * T with T ~ Student-t(df).
inline double student_t_sample(double df, double scale, Rng& rng) {
  const double z = rng.normal();
  return scale * z / std::sqrt(rng.chi_square(df) / df);
}

enum class ErrorDistribution { Normal, StudentT };

struct ErrorModel {
  ErrorDistribution kind = ErrorDistribution::Normal;
  /// Normal: variance. Student-t: squared scale.
  double variance = 0.25;
  double df = 14.0;

  double draw(Rng& rng) const {
    if (kind == ErrorDistribution::Normal) {
      return std::sqrt(variance) * rng.normal();
    }
    return student_t_sample(df, std::sqrt(variance), rng);
  }
};

struct ComponentModel {
  double b0 = 0.0;
  double b1 = 1.0;
  double x_mean = 0.0;
  double x_var = 1.0;
};

struct ExperimentConfig {
  Index n = 1000;
  int replications = 1000;
  std::array<ComponentModel, 2> components{};
  ErrorModel error{};
  double alpha = 0.05;
  std::uint64_t seed = 20190520;
};

inline void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::ConfigError, msg);
  };
  if (cfg.n < 10) fail("n must be at least 10");
  if (cfg.replications < 1) fail("B must be at least 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("alpha must lie in (0, 1)");
  for (const auto& c : cfg.components) {
    if (!(c.x_var > 0.0)) fail("regressor variance must be positive");
    if (!std::isfinite(c.b0) || !std::isfinite(c.b1) ||
        !std::isfinite(c.x_mean)) {
      fail("coefficients and regressor means must be finite");
    }
  }
  if (cfg.error.kind == ErrorDistribution::Normal) {
    if (!(cfg.error.variance >= 0.0)) fail("error variance must be >= 0");
  } else {
    if (!(cfg.error.variance > 0.0)) fail("error scale must be positive");
    if (!(cfg.error.df > 4.0)) fail("Student-t df must exceed 4");
  }
}

/// Shared design of the three reference experiments.
inline ExperimentConfig base_experiment() {
  ExperimentConfig cfg;
  cfg.components[0] = {0.5, 2.0, 0.0, 2.0};
  cfg.components[1] = {-0.5, -1.0 / 3.0, 1.0, 2.0};
  return cfg;
}

/// Normal errors with variance 0.25.
inline ExperimentConfig experiment1() {
  ExperimentConfig cfg = base_experiment();
  cfg.error = {ErrorDistribution::Normal, 0.25, 0.0};
  return cfg;
}

/// Normal errors with variance 2.
inline ExperimentConfig experiment2() {
  ExperimentConfig cfg = base_experiment();
  cfg.error = {ErrorDistribution::Normal, 2.0, 0.0};
  return cfg;
}

/// Unit-scale Student-t errors with 14 degrees of freedom.
inline ExperimentConfig experiment3() {
  ExperimentConfig cfg = base_experiment();
  cfg.error = {ErrorDistribution::StudentT, 1.0, 14.0};
  return cfg;
}

inline ExperimentConfig preset(std::string_view name) {
  if (name == "exp1") return experiment1();
  if (name == "exp2") return experiment2();
  if (name == "exp3") return experiment3();
  throw Error(ErrorKind::ConfigError,
              "unknown preset '" + std::string(name) + "' (exp1|exp2|exp3)");
}

/// Draws one sample. The recorded concentrations are the design
/// probabilities (j/n, 1 - j/n), not the realized memberships.
inline PairedSample gen_sample(const ExperimentConfig& cfg,
                               std::uint64_t replicate) {
  const Index n = cfg.n;
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(n), replicate);
  Vector x(n);
  Vector y(n);
  RowMatrix probs(n, 2);
  for (Index j = 0; j < n; ++j) {
    const double p1 = static_cast<double>(j + 1) / static_cast<double>(n);
    probs(j, 0) = p1;
    probs(j, 1) = 1.0 - p1;
    const ComponentModel& c = cfg.components[rng.uniform() < p1 ? 0 : 1];
    const double x_true = c.x_mean + std::sqrt(c.x_var) * rng.normal();
    const double y_true = c.b0 + c.b1 * x_true;
    x(j) = x_true + cfg.error.draw(rng);
    y(j) = y_true + cfg.error.draw(rng);
  }
  return make_paired_sample(std::move(x), std::move(y),
                            validate_concentrations(std::move(probs)));
}

struct ComponentCoverage {
  int covered_b0 = 0;
  int covered_b1 = 0;
  int covered_joint = 0;
  int failures = 0;
  int effective = 0;

  /// covered / effective; NaN when every replicate failed.
  static double frequency(int covered, int effective) {
    return effective > 0 ? static_cast<double>(covered) / effective
                         : std::numeric_limits<double>::quiet_NaN();
  }
  double b0() const { return frequency(covered_b0, effective); }
  double b1() const { return frequency(covered_b1, effective); }
  double joint() const { return frequency(covered_joint, effective); }
};

struct CoverageReport {
  Index n = 0;
  int replications = 0;
  double alpha = 0.0;
  std::array<ComponentCoverage, 2> components{};
};

struct ReplicateOutcome {
  std::array<bool, 2> ok{};
  std::array<std::array<bool, 3>, 2> covered{};  // b0, b1, joint
};

inline ReplicateOutcome run_replicate(const ExperimentConfig& cfg,
                                      std::uint64_t replicate) {
  ReplicateOutcome out;
  const PairedSample sample = gen_sample(cfg, replicate);
  std::optional<EivFitter> fitter;
  try {
    fitter.emplace(sample);
  } catch (const Error&) {
    return out;
  }
  for (Index k = 0; k < 2; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const ComponentModel& truth = cfg.components[ku];
    try {
      const ComponentFit fit = fitter->fit(k);
      Vector center(2);
      center << fit.coefficients.b0, fit.coefficients.b1;
      Vector target(2);
      target << truth.b0, truth.b1;
      const ConfidenceEllipsoid set = ellipsoid(center, fit.acm, cfg.alpha);
      const auto i0 = interval(center(0), fit.acm.v(0, 0), fit.acm.n, cfg.alpha);
      const auto i1 = interval(center(1), fit.acm.v(1, 1), fit.acm.n, cfg.alpha);
      out.covered[ku] = {i0.contains(truth.b0), i1.contains(truth.b1),
                         set.contains(target)};
      out.ok[ku] = true;
    } catch (const Error&) {
      out.ok[ku] = false;
    }
  }
  return out;
}

/// Replicates run on up to `threads` workers; counts are aggregated in
/// replicate order, so the report does not depend on the thread count.
inline CoverageReport run_experiment(const ExperimentConfig& cfg,
                                     unsigned threads = 1) {
  validate(cfg);
  std::vector<ReplicateOutcome> outcomes(
      static_cast<std::size_t>(cfg.replications));
  parallel_chunks(cfg.replications, threads,
                  [&](std::int64_t begin, std::int64_t end) {
                    for (std::int64_t r = begin; r < end; ++r) {
                      outcomes[static_cast<std::size_t>(r)] = run_replicate(
                          cfg, static_cast<std::uint64_t>(r));
                    }
                  });

  CoverageReport report;
  report.n = cfg.n;
  report.replications = cfg.replications;
  report.alpha = cfg.alpha;
  for (const auto& o : outcomes) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& c = report.components[k];
      if (!o.ok[k]) {
        ++c.failures;
        continue;
      }
      ++c.effective;
      c.covered_b0 += o.covered[k][0];
      c.covered_b1 += o.covered[k][1];
      c.covered_joint += o.covered[k][2];
    }
  }
  return report;
}

}  // namespace mvcjack
