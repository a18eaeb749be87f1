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

// Weighted-moment estimation for mixtures with varying concentrations.
//
// Observation j comes from component m with known probability p(j, m). The
// minimax weights a = p (p^T p)^{-1} satisfy a^T p = I, so the weighted mean
// sum_j a(j, k) xi_j is an unbiased estimate of the k-th component mean.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "mvcjack/error.hpp"

namespace mvcjack {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major storage for n-row tables so that a single observation is
/// contiguous.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kEntryTolerance = 1e-12;
inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kRenormalizeThreshold = 1e-14;

/// n x d table of observed variables, one observation per row.
class ObservationMatrix {
 public:
  ObservationMatrix() = default;
  explicit ObservationMatrix(RowMatrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw Error(ErrorKind::DimensionMismatch,
                  "observation matrix must have n >= 1 and d >= 1");
    }
    if (!data_.allFinite()) {
      throw Error(ErrorKind::NonFiniteValue,
                  "observation matrix contains a non-finite entry");
    }
  }

  const RowMatrix& data() const noexcept { return data_; }
  Index n() const noexcept { return data_.rows(); }
  Index d() const noexcept { return data_.cols(); }

 private:
  RowMatrix data_;
};

/// n x M matrix of mixing probabilities. Entries lie in [0, 1] and every row
/// sums to one. Construct through validate_concentrations().
class ConcentrationMatrix {
 public:
  ConcentrationMatrix() = default;

  const RowMatrix& probs() const noexcept { return probs_; }
  Index n() const noexcept { return probs_.rows(); }
  Index M() const noexcept { return probs_.cols(); }

 private:
  explicit ConcentrationMatrix(RowMatrix probs) : probs_(std::move(probs)) {}
  friend ConcentrationMatrix validate_concentrations(RowMatrix raw);

  RowMatrix probs_;
};

/// Gamma = p^T p together with its inverse and determinant.
struct GramMatrix {
  Matrix gamma;
  Matrix inverse;
  double det = 0.0;

  Index M() const noexcept { return gamma.rows(); }
};

/// n x M minimax weights; column k estimates component k.
struct WeightMatrix {
  RowMatrix weights;

  Index n() const noexcept { return weights.rows(); }
  Index M() const noexcept { return weights.cols(); }
};

/// M x d stacked component means; row k is the weighted mean for component k.
struct ComponentMeans {
  RowMatrix means;

  Index M() const noexcept { return means.rows(); }
  Index d() const noexcept { return means.cols(); }
};

/// Checks ranges and row sums. Entries within 1e-12 outside [0, 1] are
/// clamped; rows within 1e-9 of unit sum are accepted and renormalized.
inline ConcentrationMatrix validate_concentrations(RowMatrix raw) {
  if (raw.rows() < 1 || raw.cols() < 1) {
    throw Error(ErrorKind::DimensionMismatch,
                "concentration matrix must be nonempty");
  }
  for (Index j = 0; j < raw.rows(); ++j) {
    for (Index m = 0; m < raw.cols(); ++m) {
      double& v = raw(j, m);
      if (!std::isfinite(v) || v < -kEntryTolerance ||
          v > 1.0 + kEntryTolerance) {
        std::ostringstream os;
        os << "row " << j << ", component " << m << ": value " << v
           << " outside [0, 1]";
        throw Error(ErrorKind::EntryOutOfRange, os.str());
      }
      v = std::clamp(v, 0.0, 1.0);
    }
    const double sum = raw.row(j).sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << j << " sums to " << sum;
      throw Error(ErrorKind::RowSumViolation, os.str());
    }
    // Rows already at unit sum up to rounding are left alone so validation
    // is idempotent.
    if (std::abs(sum - 1.0) > kRenormalizeThreshold) raw.row(j) /= sum;
  }
  return ConcentrationMatrix(std::move(raw));
}

/// Singular when det(Gamma) <= 1e-12 * n^M, a threshold that scales with
/// Gamma's entries, which grow like n.
inline GramMatrix gram(const ConcentrationMatrix& p) {
  const auto& probs = p.probs();
  GramMatrix g;
  g.gamma = probs.transpose() * probs;
  g.gamma = 0.5 * (g.gamma + g.gamma.transpose()).eval();

  const double threshold =
      1e-12 * std::pow(static_cast<double>(p.n()), static_cast<double>(p.M()));
  Eigen::LLT<Matrix> llt(g.gamma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularGram,
                "Gram matrix is not positive definite; concentration columns "
                "are linearly dependent");
  }
  g.det = llt.matrixLLT().diagonal().array().square().prod();
  if (!(g.det > threshold)) {
    std::ostringstream os;
    os << "det(Gamma) = " << g.det << " <= " << threshold
       << "; concentration columns are linearly dependent";
    throw Error(ErrorKind::SingularGram, os.str());
  }
  g.inverse = llt.solve(Matrix::Identity(p.M(), p.M()));
  g.inverse = 0.5 * (g.inverse + g.inverse.transpose()).eval();
  return g;
}

inline WeightMatrix minimax_weights(const ConcentrationMatrix& p,
                                    const GramMatrix& g) {
  if (g.M() != p.M()) {
    throw Error(ErrorKind::DimensionMismatch,
                "Gram matrix does not match concentration matrix");
  }
  return WeightMatrix{p.probs() * g.inverse};
}

inline WeightMatrix minimax_weights(const ConcentrationMatrix& p) {
  return minimax_weights(p, gram(p));
}

inline ComponentMeans weighted_means(const ObservationMatrix& xi,
                                     const WeightMatrix& a) {
  if (xi.n() != a.n()) {
    std::ostringstream os;
    os << "observation rows (" << xi.n() << ") != weight rows (" << a.n()
       << ")";
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
  return ComponentMeans{a.weights.transpose() * xi.data()};
}

/// max |a^T p - I|, the unbiasedness residual.
inline double unbiasedness_residual(const WeightMatrix& a,
                                    const ConcentrationMatrix& p) {
  const Matrix r = a.weights.transpose() * p.probs() -
                   Matrix::Identity(p.M(), p.M());
  return r.cwiseAbs().maxCoeff();
}

}  // namespace mvcjack
