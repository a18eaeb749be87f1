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

// Implementations of the mvcjack subcommands: fit, simulate, bench, ellipse.
// tools/mvcjack.cpp only parses flags and maps exceptions to exit codes.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvcjack/eiv_regression.hpp"
#include "mvcjack/error.hpp"
#include "mvcjack/inference.hpp"
#include "mvcjack/io.hpp"
#include "mvcjack/jackknife.hpp"
#include "mvcjack/sim_harness.hpp"

namespace mvcjack {

/// Bad command-line usage (exit code 1).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

inline int exit_code_for(const Error& e) {
  return is_data_error(e.kind()) ? kExitData : kExitNumerical;
}

inline constexpr double kHighLeverageWarning = 0.5;

struct EllipsoidSummary {
  Vector center;
  Vector axis_lengths;
  Matrix axis_directions;  // unit vectors as columns
  double radius2 = 0.0;
};

struct ComponentReport {
  Index component = 1;  // 1-based
  double b0 = 0.0;
  double b1 = 0.0;
  Matrix v;
  Vector se;
  std::vector<ConfidenceInterval> intervals;
  std::optional<EllipsoidSummary> ellipsoid;
  std::vector<std::string> warnings;
};

struct FitReport {
  Index n = 0;
  Index M = 0;
  double alpha = 0.05;
  double max_leverage = 0.0;
  std::vector<ComponentReport> components;
  std::vector<std::string> warnings;
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorKind::ParseError, "ragged matrix in report");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  }
  return v;
}

}  // namespace detail

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json out;
  out["n"] = r.n;
  out["M"] = r.M;
  out["alpha"] = r.alpha;
  out["max_leverage"] = r.max_leverage;
  out["warnings"] = r.warnings;
  auto comps = nlohmann::json::array();
  for (const auto& c : r.components) {
    nlohmann::json jc;
    jc["component"] = c.component;
    jc["b0"] = c.b0;
    jc["b1"] = c.b1;
    jc["V"] = detail::matrix_to_json(c.v);
    jc["se"] = detail::vector_to_json(c.se);
    auto ints = nlohmann::json::array();
    for (const auto& i : c.intervals) {
      ints.push_back({{"low", i.low}, {"upp", i.upp}, {"alpha", i.alpha}});
    }
    jc["intervals"] = std::move(ints);
    if (c.ellipsoid) {
      jc["ellipsoid"] = {
          {"center", detail::vector_to_json(c.ellipsoid->center)},
          {"axes", detail::vector_to_json(c.ellipsoid->axis_lengths)},
          {"axis_directions",
           detail::matrix_to_json(c.ellipsoid->axis_directions)},
          {"radius2", c.ellipsoid->radius2}};
    } else {
      jc["ellipsoid"] = nullptr;
    }
    jc["warnings"] = c.warnings;
    comps.push_back(std::move(jc));
  }
  out["components"] = std::move(comps);
  return out;
}

inline FitReport fit_report_from_json(const nlohmann::json& j) {
  try {
    FitReport r;
    r.n = j.at("n").get<Index>();
    r.M = j.at("M").get<Index>();
    r.alpha = j.at("alpha").get<double>();
    r.max_leverage = j.at("max_leverage").get<double>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& jc : j.at("components")) {
      ComponentReport c;
      c.component = jc.at("component").get<Index>();
      c.b0 = jc.at("b0").get<double>();
      c.b1 = jc.at("b1").get<double>();
      c.v = detail::matrix_from_json(jc.at("V"));
      c.se = detail::vector_from_json(jc.at("se"));
      for (const auto& ji : jc.at("intervals")) {
        c.intervals.push_back({ji.at("low").get<double>(),
                               ji.at("upp").get<double>(),
                               ji.at("alpha").get<double>()});
      }
      if (const auto& je = jc.at("ellipsoid"); !je.is_null()) {
        c.ellipsoid = EllipsoidSummary{
            detail::vector_from_json(je.at("center")),
            detail::vector_from_json(je.at("axes")),
            detail::matrix_from_json(je.at("axis_directions")),
            je.at("radius2").get<double>()};
      }
      c.warnings = jc.at("warnings").get<std::vector<std::string>>();
      r.components.push_back(std::move(c));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError,
                std::string("malformed fit report: ") + e.what());
  }
}

inline FitReport parse_fit_report(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError,
                std::string("fit report is not valid JSON: ") + e.what());
  }
  return fit_report_from_json(j);
}

inline std::string format_fit_report(const FitReport& r) {
  return to_json(r).dump(2) + "\n";
}

/// Fits every component and assembles coefficients, covariance, standard
/// errors, intervals, and the joint ellipsoid summary.
inline FitReport build_fit_report(const PairedSample& sample, double alpha,
                                  unsigned threads = 1) {
  detail::require_probability(alpha, "alpha");
  const EivFitter fitter(sample);
  FitReport report;
  report.n = fitter.n();
  report.M = fitter.M();
  report.alpha = alpha;
  report.max_leverage = fitter.jackknife().leverage().h.maxCoeff();
  if (report.max_leverage > kHighLeverageWarning) {
    std::ostringstream os;
    os << "maximum leverage " << report.max_leverage << " exceeds "
       << kHighLeverageWarning;
    report.warnings.push_back(os.str());
  }
  for (Index k = 0; k < fitter.M(); ++k) {
    ComponentFit fit;
    try {
      fit = fitter.fit(k, threads);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "component " << k + 1;
      throw Error(e.kind(), os.str(), e);
    }
    ComponentReport c;
    c.component = k + 1;
    c.b0 = fit.coefficients.b0;
    c.b1 = fit.coefficients.b1;
    c.v = fit.acm.v;
    const double n = static_cast<double>(fit.acm.n);
    c.se = (c.v.diagonal() / n).cwiseSqrt();
    c.intervals.push_back(interval(c.b0, c.v(0, 0), fit.acm.n, alpha));
    c.intervals.push_back(interval(c.b1, c.v(1, 1), fit.acm.n, alpha));
    if (!moments_near_psd(fitter.jackknife().means().means.row(k).transpose())) {
      c.warnings.push_back("negative weighted second moment");
    }
    Vector center(2);
    center << c.b0, c.b1;
    try {
      const ConfidenceEllipsoid set = ellipsoid(center, fit.acm, alpha);
      const auto [lengths, dirs] = set.axes();
      c.ellipsoid = EllipsoidSummary{center, lengths, dirs, set.radius2()};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularACM) throw;
      c.warnings.push_back("covariance estimate is singular; no ellipsoid");
    }
    report.components.push_back(std::move(c));
  }
  return report;
}

inline FitReport cmd_fit(const std::string& input, double alpha,
                         const std::string& output, unsigned threads = 1) {
  const PairedSample sample = read_sample_csv(input);
  FitReport report = build_fit_report(sample, alpha, threads);
  detail::write_file(output, format_fit_report(report));
  return report;
}

/// Preset first, then the config file on top. At least one is required.
inline SimulationPlan load_simulation_plan(
    const std::optional<std::string>& config_path,
    const std::optional<std::string>& preset_name) {
  if (!config_path && !preset_name) {
    throw UsageError("simulate needs --config and/or --preset");
  }
  SimulationPlan base{preset_name ? preset(*preset_name) : ExperimentConfig{},
                      {}};
  if (!config_path) {
    base.sizes = default_sizes();
    for (Index n : base.sizes) {
      ExperimentConfig probe = base.config;
      probe.n = n;
      validate(probe);
    }
    return base;
  }
  return parse_config(detail::read_file(*config_path), std::move(base));
}

inline std::vector<CoverageReport> run_plan(const SimulationPlan& plan,
                                            unsigned threads = 1) {
  std::vector<CoverageReport> reports;
  for (Index n : plan.sizes) {
    ExperimentConfig cfg = plan.config;
    cfg.n = n;
    reports.push_back(run_experiment(cfg, threads));
  }
  return reports;
}

inline std::string format_coverage_csv(
    const std::vector<CoverageReport>& reports) {
  std::string out = coverage_csv_header();
  for (const auto& r : reports) out += format_coverage_row(r);
  return out;
}

inline std::vector<CoverageReport> cmd_simulate(
    const std::optional<std::string>& config_path,
    const std::optional<std::string>& preset_name, const std::string& output,
    unsigned threads = 1) {
  const SimulationPlan plan = load_simulation_plan(config_path, preset_name);
  auto reports = run_plan(plan, threads);
  detail::write_file(output, format_coverage_csv(reports));
  return reports;
}

struct BenchRow {
  Index n = 0;
  double fast_seconds = 0.0;
  std::optional<double> naive_seconds;
  std::optional<double> max_rel_diff;
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

struct BenchInstance {
  ObservationMatrix xi;
  ConcentrationMatrix p;
};

/// Random M-component design with d-dimensional normal observations.
inline BenchInstance make_bench_instance(Index n, Index M, Index d,
                                         std::uint64_t seed) {
  Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(n), 0);
  RowMatrix probs(n, M);
  RowMatrix data(n, d);
  for (Index j = 0; j < n; ++j) {
    double sum = 0.0;
    for (Index m = 0; m < M; ++m) {
      probs(j, m) = -std::log(1.0 - rng.uniform());
      sum += probs(j, m);
    }
    probs.row(j) /= sum;
    for (Index c = 0; c < d; ++c) data(j, c) = rng.normal() + 0.5 * static_cast<double>(c);
  }
  return {ObservationMatrix(std::move(data)),
          validate_concentrations(std::move(probs))};
}

/// Smooth R^d -> R^2 statistic used for timing.
inline SmoothStatistic bench_statistic(Index d) {
  SmoothStatistic stat;
  stat.dim_in = d;
  stat.dim_out = 2;
  stat.eval = [](const Vector& mu) {
    Vector out(2);
    out << mu.squaredNorm(), std::sin(mu(0)) + std::exp(0.1 * mu.sum());
    return out;
  };
  return stat;
}

inline double relative_frobenius(const Matrix& a, const Matrix& reference) {
  return (a - reference).norm() / (1.0 + reference.norm());
}

inline constexpr double kBenchAgreement = 1e-8;

/// Times the fast path (and the naive path for n <= naive_max), M = 2, d = 5.
inline BenchReport cmd_bench(const std::vector<Index>& sizes, Index naive_max,
                             unsigned threads = 1) {
  using clock = std::chrono::steady_clock;
  constexpr Index M = 2;
  constexpr Index d = 5;
  std::vector<Index> sorted = sizes;
  std::sort(sorted.begin(), sorted.end());
  const SmoothStatistic stat = bench_statistic(d);

  BenchReport report;
  for (Index n : sorted) {
    if (n < 2) throw UsageError("bench sizes must be at least 2");
    const BenchInstance inst = make_bench_instance(n, M, d, 42);
    BenchRow row;
    row.n = n;
    std::vector<JackknifeACM> fast;
    double best = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (int rep = 0; rep < 5 && (rep < 1 || total < 0.2); ++rep) {
      const auto t0 = clock::now();
      fast = jackknife_acm_fast_all(inst.xi, inst.p, stat, threads);
      const double s = std::chrono::duration<double>(clock::now() - t0).count();
      best = std::min(best, s);
      total += s;
    }
    row.fast_seconds = best;
    if (n <= naive_max) {
      const auto t0 = clock::now();
      double diff = 0.0;
      for (Index k = 0; k < M; ++k) {
        const JackknifeACM naive = jackknife_acm_naive(inst.xi, inst.p, stat, k);
        diff = std::max(diff, relative_frobenius(
                                  fast[static_cast<std::size_t>(k)].v, naive.v));
      }
      row.naive_seconds =
          std::chrono::duration<double>(clock::now() - t0).count() / M;
      row.max_rel_diff = diff;
    }
    report.rows.push_back(row);
  }
  for (auto it = report.rows.rbegin(); it != report.rows.rend(); ++it) {
    if (!it->max_rel_diff) continue;
    if (!(*it->max_rel_diff < kBenchAgreement)) {
      std::ostringstream os;
      os << "fast and naive jackknife disagree at n = " << it->n
         << " (relative difference " << *it->max_rel_diff << ")";
      throw Error(ErrorKind::StatisticEvaluation, os.str());
    }
    break;
  }
  return report;
}

inline std::string format_bench_csv(const BenchReport& r) {
  std::string out = "n,fast_seconds,naive_seconds,max_rel_diff\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.n) + ',' + format_double(row.fast_seconds) + ',';
    if (row.naive_seconds) out += format_double(*row.naive_seconds);
    out += ',';
    if (row.max_rel_diff) out += format_double(*row.max_rel_diff);
    out += '\n';
  }
  return out;
}

inline std::vector<Index> parse_size_list(std::string_view text) {
  std::vector<Index> out;
  if (detail::trim(text).empty()) return out;
  for (auto item : detail::split(text, ',')) {
    item = detail::trim(item);
    double v;
    if (!detail::parse_double(item, v) || v != std::floor(v) || v < 2 ||
        v > 1e9) {
      throw UsageError("bad size '" + std::string(item) + "'");
    }
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

/// Boundary of the joint confidence ellipse of one component (1-based).
inline std::vector<Eigen::Vector2d> ellipse_points(const FitReport& report,
                                                   Index component,
                                                   double alpha) {
  if (component < 1 || component > static_cast<Index>(report.components.size())) {
    std::ostringstream os;
    os << "component " << component << " out of range; valid range is 1.."
       << report.components.size();
    throw UsageError(os.str());
  }
  const ComponentReport& c =
      report.components[static_cast<std::size_t>(component - 1)];
  Vector center(2);
  center << c.b0, c.b1;
  return ellipsoid(center, c.v, report.n, alpha).boundary();
}

inline std::string format_ellipse_csv(const std::vector<Eigen::Vector2d>& pts) {
  std::string out = "b0,b1\n";
  for (const auto& p : pts) {
    out += format_double(p(0)) + ',' + format_double(p(1)) + '\n';
  }
  return out;
}

inline std::vector<Eigen::Vector2d> cmd_ellipse(const std::string& report_path,
                                                Index component, double alpha,
                                                const std::string& output) {
  const FitReport report = parse_fit_report(detail::read_file(report_path));
  auto pts = ellipse_points(report, component, alpha);
  detail::write_file(output, format_ellipse_csv(pts));
  return pts;
}

}  // namespace mvcjack
