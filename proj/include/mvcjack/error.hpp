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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvcjack {

enum class ErrorKind {
  // input / data errors
  EntryOutOfRange,
  RowSumViolation,
  DimensionMismatch,
  NonFiniteValue,
  ParseError,
  ConfigError,
  // numerical errors
  SingularGram,
  LeverageAtOne,
  StatisticEvaluation,
  DegenerateSlope,
  SingularACM,
  UnsupportedDimension,
  NegativeVariance,
  DomainError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EntryOutOfRange: return "EntryOutOfRange";
    case ErrorKind::RowSumViolation: return "RowSumViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::LeverageAtOne: return "LeverageAtOne";
    case ErrorKind::StatisticEvaluation: return "StatisticEvaluationError";
    case ErrorKind::DegenerateSlope: return "DegenerateSlope";
    case ErrorKind::SingularACM: return "SingularACM";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::NegativeVariance: return "NegativeVariance";
    case ErrorKind::DomainError: return "DomainError";
  }
  return "Unknown";
}

/// True for errors caused by malformed or inconsistent input rather than by
/// the numerics of an otherwise well-formed problem.
constexpr bool is_data_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EntryOutOfRange:
    case ErrorKind::RowSumViolation:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NonFiniteValue:
    case ErrorKind::ParseError:
    case ErrorKind::ConfigError:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        root_(kind) {}

  /// Wraps a lower-level error; `root()` keeps the innermost kind.
  Error(ErrorKind kind, const std::string& what, const Error& cause)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what + " (" +
                           cause.what() + ")"),
        kind_(kind),
        root_(cause.root()) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorKind root() const noexcept { return root_; }

 private:
  ErrorKind kind_;
  ErrorKind root_;
};

}  // namespace mvcjack
