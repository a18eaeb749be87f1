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


// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvcjack/cli.hpp"
#include "test_oracles.hpp"

namespace {

using namespace mvcjack;
using clock_type = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double rel_frob(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// 1. Fast and naive jackknife agree on random instances.
Outcome oracle_equivalence() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<Index> size(50, 500);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = size(rng);
    const Index M = 1 + inst % 3;
    const Index d = (inst / 3) % 2 ? 5 : 1;
    const Index q = 1 + inst % 4;
    const auto p = validate_concentrations(testing::random_concentrations(rng, n, M));
    const ObservationMatrix xi(testing::random_observations(rng, n, d));
    const SmoothStatistic stat = testing::random_statistic(rng, d, q);
    const auto fast = jackknife_acm_fast_all(xi, p, stat);
    for (Index k = 0; k < M; ++k) {
      const auto naive = jackknife_acm_naive(xi, p, stat, k);
      worst = std::max(worst, rel_frob(fast[static_cast<std::size_t>(k)].v, naive.v));
    }
  }
  return {worst <= 1e-8, "max relative Frobenius error " + fmt(worst) + " (limit 1e-8)"};
}

// 2. Unbiasedness, leverage sum, rank-one update, classical closed form.
Outcome algebraic_identities() {
  std::mt19937_64 rng(202);
  double unbiased = 0.0;
  double lev_sum = 0.0;
  double sm = 0.0;
  for (int inst = 0; inst < 30; ++inst) {
    const Index M = 1 + inst % 3;
    const Index n = 30 + 17 * inst;
    const auto p = validate_concentrations(testing::random_concentrations(rng, n, M));
    const GramMatrix g = gram(p);
    unbiased = std::max(unbiased, unbiasedness_residual(minimax_weights(p, g), p));
    const LeverageVector lev = leverages(p, g);
    lev_sum = std::max(lev_sum, std::abs(lev.h.sum() - static_cast<double>(M)));
    for (Index i = 0; i < n; ++i) {
      const Vector pi = p.probs().row(i).transpose();
      const Matrix inv = loo_gram_inverse(g, pi, lev.h(i));
      const Matrix gm = g.gamma - pi * pi.transpose();
      sm = std::max(sm, (gm * inv - Matrix::Identity(M, M)).cwiseAbs().maxCoeff());
    }
  }
  double classical = 0.0;
  for (Index n : {10, 100, 1000}) {
    const RowMatrix xi = testing::random_observations(rng, n, 3);
    SmoothStatistic id;
    id.dim_in = id.dim_out = 3;
    id.eval = [](const Vector& mu) { return mu; };
    const auto v = jackknife_acm_fast(ObservationMatrix(xi),
                                      validate_concentrations(RowMatrix::Ones(n, 1)), id, 0);
    const RowMatrix c = xi.rowwise() - xi.colwise().mean();
    const Matrix expected =
        static_cast<double>(n) / ((n - 1.0) * (n - 1.0)) * (c.transpose() * c);
    classical = std::max(classical, (v.v - expected).cwiseAbs().maxCoeff());
  }
  const bool ok = unbiased <= 1e-10 && lev_sum <= 1e-9 && sm < 1e-9 && classical <= 1e-12;
  return {ok, "|a'p - I| " + fmt(unbiased) + ", |sum h - M| " + fmt(lev_sum) +
                  ", rank-one residual " + fmt(sm) + ", closed form " + fmt(classical)};
}

// 3. Orthogonal fit against brute-force total least squares.
Outcome orthogonal_fit_oracle() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  int sets = 0;
  while (sets < 20) {
    const double sx = 0.3 + 2 * std::abs(unif(rng));
    const double sy = 0.3 + 2 * std::abs(unif(rng));
    const double rho = 0.95 * unif(rng);
    if (std::abs(rho) < 0.02) continue;
    const double m_x = 3 * unif(rng);
    const double m_y = 3 * unif(rng);
    const auto fit = orthogonal_fit(sx * sx, sy * sy, rho * sx * sy, m_x, m_y);
    const auto [b0, b1] = testing::tls_oracle(sx * sx, sy * sy, rho * sx * sy, m_x, m_y);
    worst = std::max({worst, std::abs(fit.b0 - b0), std::abs(fit.b1 - b1)});
    ++sets;
  }
  double line = 0.0;
  std::normal_distribution<double> normal;
  for (double slope : {2.0, -1.0 / 3.0, 0.1, -7.0}) {
    Vector x(100), y(100);
    for (Index j = 0; j < 100; ++j) {
      x(j) = 1 + normal(rng);
      y(j) = -0.25 + slope * x(j);
    }
    const EivFitter fitter(make_paired_sample(
        x, y, validate_concentrations(RowMatrix::Ones(100, 1))));
    const Vector b = fitter.jackknife().estimate(regression_statistic(0), 0);
    line = std::max({line, std::abs(b(0) + 0.25), std::abs(b(1) - slope)});
  }
  return {worst <= 1e-6 && line <= 1e-10,
          "max deviation from brute force " + fmt(worst) + " (limit 1e-6), noiseless " +
              fmt(line) + " (limit 1e-10)"};
}

std::string coverage_row(const CoverageReport& r) {
  std::string out;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& c = r.components[k];
    out += (k ? "; " : "") + std::string("component ") + std::to_string(k + 1) + ": " +
           fmt(c.b0()) + " " + fmt(c.b1()) + " " + fmt(c.joint());
    if (c.failures) out += " (" + std::to_string(c.failures) + " failed)";
  }
  return out;
}

std::array<double, 6> frequencies(const CoverageReport& r) {
  const auto& a = r.components[0];
  const auto& b = r.components[1];
  return {a.b0(), a.b1(), a.joint(), b.b0(), b.b1(), b.joint()};
}

CoverageReport coverage_at_1000(ExperimentConfig cfg) {
  cfg.n = 1000;
  cfg.replications = 1000;
  return run_experiment(cfg, threads_from_env());
}

// 4. Experiment 1 reference table row at n = 1000.
Outcome coverage_experiment1() {
  const CoverageReport r = coverage_at_1000(experiment1());
  const auto f = frequencies(r);
  bool ok = std::abs(f[2] - 0.943) <= 0.03 && std::abs(f[5] - 0.935) <= 0.03;
  for (double v : f) ok = ok && v >= 0.92 && v <= 0.98;
  return {ok, coverage_row(r) + " (joint targets 0.943, 0.935 +- 0.03; all in [0.92, 0.98])"};
}

// 5. Experiment 2 reference table row at n = 1000.
Outcome coverage_experiment2() {
  const CoverageReport r = coverage_at_1000(experiment2());
  const auto f = frequencies(r);
  const double target[] = {0.959, 0.946, 0.954, 0.947, 0.958, 0.942};
  bool ok = true;
  for (std::size_t i = 0; i < 6; ++i) ok = ok && std::abs(f[i] - target[i]) <= 0.03;
  return {ok, coverage_row(r) + " (targets 0.959 0.946 0.954 / 0.947 0.958 0.942 +- 0.03)"};
}

// 6. Student-t errors, nominal level.
Outcome coverage_experiment3() {
  const CoverageReport r = coverage_at_1000(experiment3());
  bool ok = true;
  for (double v : frequencies(r)) ok = ok && std::abs(v - 0.95) <= 0.03;
  return {ok, coverage_row(r) + " (nominal 0.95 +- 0.03)"};
}

double time_fast(const BenchInstance& inst, const SmoothStatistic& stat, int reps) {
  double best = INFINITY;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    const auto v = jackknife_acm_fast(inst.xi, inst.p, stat, 0);
    best = std::min(best, seconds_since(t0));
    if (!v.v.allFinite()) return NAN;
  }
  return best;
}

// 7. Linear cost of the fast path, quadratic cost of the naive path.
Outcome linear_complexity() {
  const SmoothStatistic stat = bench_statistic(5);
  const BenchInstance small = make_bench_instance(10000, 2, 5, 7);
  const BenchInstance large = make_bench_instance(100000, 2, 5, 7);
  const double t_small = time_fast(small, stat, 7);
  const double t_large = time_fast(large, stat, 3);
  const double ratio = t_large / t_small;

  const BenchInstance mid = make_bench_instance(5000, 2, 5, 7);
  const double t_fast = time_fast(mid, stat, 7);
  const auto t0 = clock_type::now();
  const auto naive = jackknife_acm_naive(mid.xi, mid.p, stat, 0);
  const double t_naive = seconds_since(t0);
  const double speedup = t_naive / t_fast;
  const bool ok = ratio <= 20.0 && speedup >= 50.0 && naive.v.allFinite();
  return {ok, "t(1e5)/t(1e4) = " + fmt(ratio) + " (limit 20); naive/fast at n = 5000: " +
                  fmt(speedup) + " (need >= 50)"};
}

// 8. Known covariance, simulated estimates.
Outcome inference_calibration() {
  std::mt19937_64 rng(808);
  std::normal_distribution<double> normal;
  Matrix v(2, 2);
  v << 2.0, -0.8, -0.8, 1.5;
  const Matrix l = v.llt().matrixL();
  const Index n = 1000;
  Vector truth(2);
  truth << 0.5, 2.0;
  const int draws = 10000;
  int joint = 0;
  int marginal0 = 0;
  int marginal1 = 0;
  for (int i = 0; i < draws; ++i) {
    Vector z(2);
    z << normal(rng), normal(rng);
    const Vector est = truth + l * z / std::sqrt(static_cast<double>(n));
    joint += ellipsoid(est, v, n, 0.05).contains(truth);
    marginal0 += interval(est(0), v(0, 0), n, 0.05).contains(truth(0));
    marginal1 += interval(est(1), v(1, 1), n, 0.05).contains(truth(1));
  }
  const double fj = joint / double(draws);
  const double f0 = marginal0 / double(draws);
  const double f1 = marginal1 / double(draws);
  const bool ok = std::abs(fj - 0.95) <= 0.01 && std::abs(f0 - 0.95) <= 0.01 &&
                  std::abs(f1 - 0.95) <= 0.01;
  return {ok, "ellipsoid " + fmt(fj, 4) + ", intervals " + fmt(f0, 4) + " " + fmt(f1, 4) +
                  " (0.95 +- 0.01)"};
}

// 9. Simulation output depends only on the configuration.
Outcome determinism() {
  const std::string dir = std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp";
  const std::string cfg = dir + "/mvcjack_acceptance.cfg";
  detail::write_file(cfg, "n = [200, 500]\nB = 40\nseed = 99\n");
  auto run = [&](const char* threads, const std::string& out) {
    ::setenv("MVCJACK_THREADS", threads, 1);
    cmd_simulate(cfg, std::string("exp3"), out, threads_from_env());
    return detail::read_file(out);
  };
  const std::string a = run("1", dir + "/mvcjack_acceptance_a.csv");
  const std::string b = run("1", dir + "/mvcjack_acceptance_b.csv");
  const std::string c = run("4", dir + "/mvcjack_acceptance_c.csv");
  ::unsetenv("MVCJACK_THREADS");
  const bool ok = a == b && a == c && !a.empty();
  return {ok, std::string("repeat run ") + (a == b ? "identical" : "DIFFERS") +
                  ", 1 vs 4 threads " + (a == c ? "identical" : "DIFFERS")};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", 30, oracle_equivalence},
      {2, "algebraic identities", 5, algebraic_identities},
      {3, "orthogonal-fit oracle", 10, orthogonal_fit_oracle},
      {4, "coverage, experiment 1", 600, coverage_experiment1},
      {5, "coverage, experiment 2", 600, coverage_experiment2},
      {6, "coverage, experiment 3", 600, coverage_experiment3},
      {7, "linear complexity", 120, linear_complexity},
      {8, "inference calibration", 60, inference_calibration},
      {9, "determinism", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = clock_type::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (secs > c.time_limit) {
      o.pass = false;
      o.detail += "; exceeded time limit of " + fmt(c.time_limit) + " s";
    }
    std::printf("[%s] criterion %d, %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id,
                c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
