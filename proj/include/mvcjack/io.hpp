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

// Text formats:
//
//  * sample CSV: header `x,y,p1,...,pM`, one observation per line, `.` as
//    decimal separator, no missing values.
//  * experiment config: flat `key = value` lines (a TOML subset). Values are
//    numbers, quoted strings, or `[a, b, ...]` number lists; `#` starts a
//    comment.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mvcjack/eiv_regression.hpp"
#include "mvcjack/error.hpp"
#include "mvcjack/sim_harness.hpp"

namespace mvcjack {

/// Shortest decimal string that parses back to exactly `value`; "nan",
/// "inf" and "-inf" for non-finite values.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size() &&
         std::isfinite(out);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::ParseError, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorKind::ParseError, "write failed for '" + path + "'");
}

[[noreturn]] inline void parse_fail(std::size_t line, std::size_t column,
                                    const std::string& msg) {
  std::ostringstream os;
  os << "line " << line;
  if (column > 0) os << ", column " << column;
  os << ": " << msg;
  throw Error(ErrorKind::ParseError, os.str());
}

}  // namespace detail

inline PairedSample parse_sample_csv(std::string_view text) {
  std::vector<std::string_view> lines = detail::split(text, '\n');
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) detail::parse_fail(1, 0, "missing header");

  std::string_view header_line = lines.front();
  if (header_line.size() >= 3 &&
      header_line.substr(0, 3) == "\xEF\xBB\xBF") {
    header_line.remove_prefix(3);
  }
  const auto header = detail::split(header_line, ',');
  if (header.size() < 3 || detail::trim(header[0]) != "x" ||
      detail::trim(header[1]) != "y") {
    detail::parse_fail(1, 0, "header must be x,y,p1,...,pM");
  }
  const std::size_t M = header.size() - 2;
  for (std::size_t m = 0; m < M; ++m) {
    if (detail::trim(header[m + 2]) != "p" + std::to_string(m + 1)) {
      detail::parse_fail(1, m + 3,
                         "expected column name p" + std::to_string(m + 1));
    }
  }

  const auto rows = static_cast<Index>(lines.size() - 1);
  if (rows < 1) detail::parse_fail(2, 0, "no observations");
  Vector x(rows);
  Vector y(rows);
  RowMatrix probs(rows, static_cast<Index>(M));
  for (Index r = 0; r < rows; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const auto fields = detail::split(lines[static_cast<std::size_t>(r) + 1], ',');
    if (fields.size() != M + 2) {
      std::ostringstream os;
      os << "expected " << M + 2 << " fields, found " << fields.size();
      detail::parse_fail(line_no, 0, os.str());
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v;
      if (!detail::parse_double(fields[c], v)) {
        detail::parse_fail(line_no, c + 1,
                           "not a finite number: '" +
                               std::string(detail::trim(fields[c])) + "'");
      }
      if (c == 0) {
        x(r) = v;
      } else if (c == 1) {
        y(r) = v;
      } else {
        if (v < -kEntryTolerance || v > 1.0 + kEntryTolerance) {
          detail::parse_fail(line_no, c + 1, "concentration outside [0, 1]");
        }
        probs(r, static_cast<Index>(c - 2)) = v;
        sum += v;
      }
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "concentrations sum to " << sum << ", not 1 (row " << r + 1 << ")";
      detail::parse_fail(line_no, 0, os.str());
    }
  }
  return make_paired_sample(std::move(x), std::move(y),
                            validate_concentrations(std::move(probs)));
}

inline PairedSample read_sample_csv(const std::string& path) {
  return parse_sample_csv(detail::read_file(path));
}

inline std::string format_sample_csv(const PairedSample& s) {
  std::string out = "x,y";
  for (Index m = 0; m < s.M(); ++m) out += ",p" + std::to_string(m + 1);
  out += '\n';
  for (Index j = 0; j < s.n(); ++j) {
    out += format_double(s.x(j));
    out += ',';
    out += format_double(s.y(j));
    for (Index m = 0; m < s.M(); ++m) {
      out += ',';
      out += format_double(s.concentrations.probs()(j, m));
    }
    out += '\n';
  }
  return out;
}

inline void write_sample_csv(const std::string& path, const PairedSample& s) {
  detail::write_file(path, format_sample_csv(s));
}

/// Experiment settings plus the list of sample sizes to sweep.
struct SimulationPlan {
  ExperimentConfig config;
  std::vector<Index> sizes;
};

/// Sample sizes of the reference coverage tables.
inline std::vector<Index> default_sizes() {
  return {100, 250, 500, 1000, 2500, 5000};
}

namespace detail {

struct ConfigValue {
  std::string text;  // raw scalar or string contents
  std::vector<double> list;
  bool is_list = false;
  bool is_string = false;
  std::size_t line = 0;
};

inline std::map<std::string, ConfigValue> parse_key_values(std::string_view text) {
  std::map<std::string, ConfigValue> out;
  const auto lines = split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    bool in_string = false;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (line[c] == '"') in_string = !in_string;
      if (line[c] == '#' && !in_string) {
        line = line.substr(0, c);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ConfigError,
                  "line " + std::to_string(i + 1) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw Error(ErrorKind::ConfigError,
                  "line " + std::to_string(i + 1) + ": empty key or value");
    }
    if (out.count(key)) {
      throw Error(ErrorKind::ConfigError,
                  "line " + std::to_string(i + 1) + ": duplicate key '" + key + "'");
    }
    ConfigValue v;
    v.line = i + 1;
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        throw Error(ErrorKind::ConfigError,
                    "line " + std::to_string(i + 1) + ": unterminated string");
      }
      v.is_string = true;
      v.text = std::string(value.substr(1, value.size() - 2));
    } else if (value.front() == '[') {
      if (value.back() != ']') {
        throw Error(ErrorKind::ConfigError,
                    "line " + std::to_string(i + 1) + ": unterminated list");
      }
      v.is_list = true;
      const std::string_view inner = trim(value.substr(1, value.size() - 2));
      if (!inner.empty()) {
        for (auto item : split(inner, ',')) {
          double d;
          if (!parse_double(item, d)) {
            throw Error(ErrorKind::ConfigError,
                        "line " + std::to_string(i + 1) + ": bad list item '" +
                            std::string(trim(item)) + "'");
          }
          v.list.push_back(d);
        }
      }
    } else {
      v.text = std::string(value);
    }
    out.emplace(key, std::move(v));
  }
  return out;
}

inline double config_number(const std::string& key, const ConfigValue& v) {
  double d;
  if (v.is_list || v.is_string || !parse_double(v.text, d)) {
    throw Error(ErrorKind::ConfigError, "line " + std::to_string(v.line) +
                                            ": '" + key + "' must be a number");
  }
  return d;
}

inline std::int64_t config_integer(const std::string& key, const ConfigValue& v) {
  std::string_view text = trim(v.text);
  std::int64_t out = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (v.is_list || v.is_string || text.empty() || res.ec != std::errc() ||
      res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::ConfigError, "line " + std::to_string(v.line) +
                                            ": '" + key +
                                            "' must be an integer");
  }
  return out;
}

inline std::uint64_t config_seed(const ConfigValue& v) {
  std::string_view text = trim(v.text);
  std::uint64_t out = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (v.is_list || v.is_string || text.empty() || res.ec != std::errc() ||
      res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::ConfigError,
                "line " + std::to_string(v.line) +
                    ": 'seed' must be an unsigned 64-bit integer");
  }
  return out;
}

}  // namespace detail

/// Applies a config file on top of `base` (typically a preset). Recognized
/// keys: n (integer or list), B, alpha, seed, b0_k, b1_k, x_mean_k, x_var_k
/// for k in {1, 2}, error_kind ("normal" | "student_t"), error_var, error_df.
inline SimulationPlan parse_config(std::string_view text, SimulationPlan base) {
  using detail::config_integer;
  using detail::config_number;
  SimulationPlan plan = std::move(base);
  ExperimentConfig& cfg = plan.config;
  for (const auto& [key, value] : detail::parse_key_values(text)) {
    auto component = [&](const std::string& prefix) -> ComponentModel* {
      if (key.size() == prefix.size() + 1 && key.compare(0, prefix.size(), prefix) == 0) {
        const char c = key.back();
        if (c == '1' || c == '2') return &cfg.components[static_cast<std::size_t>(c - '1')];
      }
      return nullptr;
    };
    if (key == "n") {
      plan.sizes.clear();
      if (value.is_list) {
        for (double d : value.list) {
          if (d != std::floor(d)) {
            throw Error(ErrorKind::ConfigError, "n entries must be integers");
          }
          plan.sizes.push_back(static_cast<Index>(d));
        }
      } else {
        plan.sizes.push_back(static_cast<Index>(config_integer(key, value)));
      }
    } else if (key == "B") {
      cfg.replications = static_cast<int>(config_integer(key, value));
    } else if (key == "alpha") {
      cfg.alpha = config_number(key, value);
    } else if (key == "seed") {
      cfg.seed = detail::config_seed(value);
    } else if (auto* c = component("b0_")) {
      c->b0 = config_number(key, value);
    } else if (auto* c1 = component("b1_")) {
      c1->b1 = config_number(key, value);
    } else if (auto* c2 = component("x_mean_")) {
      c2->x_mean = config_number(key, value);
    } else if (auto* c3 = component("x_var_")) {
      c3->x_var = config_number(key, value);
    } else if (key == "error_kind") {
      const std::string& kind = value.text;
      if (kind == "normal") {
        cfg.error.kind = ErrorDistribution::Normal;
      } else if (kind == "student_t") {
        cfg.error.kind = ErrorDistribution::StudentT;
      } else {
        throw Error(ErrorKind::ConfigError,
                    "error_kind must be \"normal\" or \"student_t\"");
      }
    } else if (key == "error_var") {
      cfg.error.variance = config_number(key, value);
    } else if (key == "error_df") {
      cfg.error.df = config_number(key, value);
    } else {
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(value.line) +
                                              ": unknown key '" + key + "'");
    }
  }
  if (plan.sizes.empty()) plan.sizes = default_sizes();
  for (Index n : plan.sizes) {
    ExperimentConfig probe = cfg;
    probe.n = n;
    validate(probe);
  }
  cfg.n = plan.sizes.front();
  return plan;
}

inline std::string coverage_csv_header() {
  return "n,b0_1,b1_1,joint_1,b0_2,b1_2,joint_2\n";
}

inline std::string format_coverage_row(const CoverageReport& r) {
  std::string out = std::to_string(r.n);
  for (const auto& c : r.components) {
    out += ',' + format_double(c.b0());
    out += ',' + format_double(c.b1());
    out += ',' + format_double(c.joint());
  }
  out += '\n';
  return out;
}

}  // namespace mvcjack
