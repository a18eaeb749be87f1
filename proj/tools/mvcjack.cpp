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

// mvcjack command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mvcjack/cli.hpp"

int main(int argc, char** argv) {
  using namespace mvcjack;

  const CLI::Validator open_unit(
      [](std::string& text) -> std::string {
        double v = 0.0;
        if (!CLI::detail::lexical_cast(text, v) || !(v > 0.0 && v < 1.0)) {
          return "alpha must lie in (0, 1)";
        }
        return {};
      },
      "(0, 1)");

  CLI::App app{"Jackknife covariance estimation for mixtures with varying "
               "concentrations"};
  app.require_subcommand(1);

  std::string fit_input;
  std::string fit_output;
  double fit_alpha = 0.05;
  auto* fit = app.add_subcommand("fit", "fit orthogonal regressions per component");
  fit->add_option("--input", fit_input, "CSV with header x,y,p1,...,pM")->required();
  fit->add_option("--alpha", fit_alpha, "significance level")
      ->capture_default_str()
      ->check(open_unit);
  fit->add_option("--out", fit_output, "JSON report path")->required();

  std::optional<std::string> sim_config;
  std::optional<std::string> sim_preset;
  std::string sim_output;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage study");
  simulate->add_option("--config", sim_config, "key = value config file");
  simulate->add_option("--preset", sim_preset, "exp1 | exp2 | exp3")
      ->check(CLI::IsMember({"exp1", "exp2", "exp3"}));
  simulate->add_option("--out", sim_output, "coverage CSV path")->required();

  std::string bench_sizes;
  long long bench_naive_max = 0;
  auto* bench = app.add_subcommand("bench", "time the fast and naive jackknife");
  bench->add_option("--sizes", bench_sizes, "comma-separated sample sizes")->required();
  bench->add_option("--with-naive-max", bench_naive_max,
                    "also run the naive path for n up to this value");

  std::string ell_report;
  std::string ell_output;
  long long ell_component = 1;
  double ell_alpha = 0.05;
  auto* ellipse = app.add_subcommand("ellipse", "export a confidence ellipse boundary");
  ellipse->add_option("--report", ell_report, "JSON report from fit")->required();
  ellipse->add_option("--component", ell_component, "component, 1-based")->required();
  ellipse->add_option("--alpha", ell_alpha, "significance level")
      ->capture_default_str()
      ->check(open_unit);
  ellipse->add_option("--out", ell_output, "boundary CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const unsigned threads = threads_from_env();
  try {
    if (*fit) {
      const FitReport r = cmd_fit(fit_input, fit_alpha, fit_output, threads);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& c : r.components) {
        for (const auto& w : c.warnings) {
          std::cerr << "warning: component " << c.component << ": " << w << "\n";
        }
      }
    } else if (*simulate) {
      const auto reports = cmd_simulate(sim_config, sim_preset, sim_output, threads);
      for (const auto& r : reports) {
        for (std::size_t k = 0; k < r.components.size(); ++k) {
          if (r.components[k].failures > 0) {
            std::cerr << "n = " << r.n << ", component " << k + 1 << ": "
                      << r.components[k].failures << " of " << r.replications
                      << " replicates failed\n";
          }
        }
      }
    } else if (*bench) {
      const BenchReport r = cmd_bench(parse_size_list(bench_sizes),
                                      static_cast<Index>(bench_naive_max), threads);
      std::cout << format_bench_csv(r);
    } else if (*ellipse) {
      cmd_ellipse(ell_report, static_cast<Index>(ell_component), ell_alpha, ell_output);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}
