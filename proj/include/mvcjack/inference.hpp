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

// Confidence sets from a point estimate and a covariance estimate V of
// sqrt(n) (estimate - truth):
//
//   T(t) = n (t - center)^T V^{-1} (t - center)
//   ellipsoid = { t : T(t) <= chi2_q quantile(1 - alpha) }
//   interval_i = estimate_i -/+ z(1 - alpha / 2) sqrt(v_ii / n)

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mvcjack/error.hpp"
#include "mvcjack/jackknife.hpp"
#include "mvcjack/mvc_core.hpp"

namespace mvcjack {

inline constexpr int kBoundaryPoints = 256;
inline constexpr double kSingularAcmTolerance = 1e-12;

namespace detail {

inline void require_probability(double prob, const char* what) {
  if (!(prob > 0.0 && prob < 1.0)) {
    std::ostringstream os;
    os << what << " = " << prob << " outside (0, 1)";
    throw Error(ErrorKind::DomainError, os.str());
  }
}

}  // namespace detail

/// Exact quantile of the chi-square distribution with 2 degrees of freedom.
inline double chi2_quantile_2df(double prob) {
  detail::require_probability(prob, "probability");
  return -2.0 * std::log1p(-prob);
}

/// Chi-square CDF for an integer number of degrees of freedom.
inline double chi2_cdf(double x, int dof) {
  if (x <= 0.0) return 0.0;
  const double half = 0.5 * x;
  const bool even = dof % 2 == 0;
  // even: 1 - e^{-h} sum_{i < dof/2} h^i / i!
  // odd:  erf(sqrt h) - e^{-h} sum_{i < (dof-1)/2} h^{i+1/2} / Gamma(i + 3/2)
  double term = even ? 1.0 : std::sqrt(half) / std::tgamma(1.5);
  double sum = 0.0;
  const int terms = even ? dof / 2 : (dof - 1) / 2;
  for (int i = 0; i < terms; ++i) {
    sum += term;
    term *= half / (even ? i + 1.0 : i + 1.5);
  }
  const double head = even ? 1.0 : std::erf(std::sqrt(half));
  return head - std::exp(-half) * sum;
}

/// Chi-square quantile for integer dof by bisection on the CDF.
inline double chi2_quantile(double prob, int dof) {
  detail::require_probability(prob, "probability");
  if (dof < 1) {
    throw Error(ErrorKind::DomainError, "degrees of freedom must be >= 1");
  }
  if (dof == 2) return chi2_quantile_2df(prob);
  double lo = 0.0;
  double hi = 1.0;
  while (chi2_cdf(hi, dof) < prob) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, dof) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Standard normal quantile: Newton iteration on log Phi, safeguarded by
/// bisection, for the lower half; the upper half by symmetry.
inline double normal_quantile(double prob) {
  detail::require_probability(prob, "probability");
  if (prob == 0.5) return 0.0;
  if (prob > 0.5) return -normal_quantile(1.0 - prob);

  const double log_target = std::log(prob);
  double lo = -38.5;
  double hi = 0.0;
  double x = -1.0;
  for (int it = 0; it < 200; ++it) {
    const double cdf = normal_cdf(x);
    const double f = std::log(cdf) - log_target;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double pdf =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    double next = x - f * cdf / pdf;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

namespace detail {

inline void require_nonsingular(const Matrix& v) {
  if (v.rows() != v.cols() || v.rows() < 1) {
    throw Error(ErrorKind::DimensionMismatch, "covariance must be square");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(v);
  const double trace = v.trace();
  if (!v.allFinite() || !(trace > 0.0) ||
      !(eig.eigenvalues().minCoeff() > kSingularAcmTolerance * trace)) {
    throw Error(ErrorKind::SingularACM,
                "covariance estimate is numerically singular");
  }
}

}  // namespace detail

/// n (t - center)^T V^{-1} (t - center).
inline double t_statistic(const Vector& t, const Vector& center,
                          const Matrix& v, Index n) {
  if (t.size() != center.size() || t.size() != v.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "t_statistic: inconsistent dimensions");
  }
  detail::require_nonsingular(v);
  const Vector diff = t - center;
  const double quad = diff.dot(v.ldlt().solve(diff));
  return static_cast<double>(n) * std::max(0.0, quad);
}

inline double t_statistic(const Vector& t, const Vector& center,
                          const JackknifeACM& acm) {
  return t_statistic(t, center, acm.v, acm.n);
}

struct ConfidenceInterval {
  double low = 0;
  double upp = 0;
  double alpha = 0;

  bool contains(double value) const { return low <= value && value <= upp; }
};

class ConfidenceEllipsoid {
 public:
  ConfidenceEllipsoid(Vector center, Matrix v, Index n, double alpha)
      : center_(std::move(center)), v_(std::move(v)), n_(n), alpha_(alpha) {
    detail::require_probability(alpha_, "alpha");
    if (center_.size() != v_.rows()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "ellipsoid center and covariance differ in dimension");
    }
    if (n_ < 1) {
      throw Error(ErrorKind::DomainError, "sample size must be positive");
    }
    detail::require_nonsingular(v_);
    // An ellipsoid narrower than the rounding error of its center is
    // rounding noise (e.g. a jackknife on noiseless data), not a set.
    const double spread = std::sqrt(v_.trace() / static_cast<double>(n_));
    if (!(spread > kSingularAcmTolerance * (1.0 + center_.norm()))) {
      throw Error(ErrorKind::SingularACM,
                  "covariance estimate is zero up to rounding");
    }
    shape_inv_ = static_cast<double>(n_) *
                 v_.ldlt().solve(Matrix::Identity(v_.rows(), v_.cols()));
    shape_inv_ = 0.5 * (shape_inv_ + shape_inv_.transpose()).eval();
    radius2_ = chi2_quantile(1.0 - alpha_, static_cast<int>(v_.rows()));
  }

  const Vector& center() const noexcept { return center_; }
  const Matrix& shape_inv() const noexcept { return shape_inv_; }
  double radius2() const noexcept { return radius2_; }
  double alpha() const noexcept { return alpha_; }
  Index n() const noexcept { return n_; }

  double statistic(const Vector& t) const {
    return t_statistic(t, center_, v_, n_);
  }
  bool contains(const Vector& t) const { return statistic(t) <= radius2_; }

  /// Semi-axis lengths (ascending) and unit directions as columns.
  std::pair<Vector, Matrix> axes() const {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(v_ /
                                                    static_cast<double>(n_));
    return {(radius2_ * eig.eigenvalues().array()).sqrt().matrix(),
            eig.eigenvectors()};
  }

  /// Points center + sqrt(radius2) Q diag(sqrt(lambda)) (cos s, sin s) for
  /// s = 2 pi k / points, where Q diag(lambda) Q^T = V / n.
  std::vector<Eigen::Vector2d> boundary(int points = kBoundaryPoints) const {
    if (center_.size() != 2) {
      throw Error(ErrorKind::UnsupportedDimension,
                  "boundary emission requires a two-dimensional parameter");
    }
    const auto [lengths, dirs] = axes();
    std::vector<Eigen::Vector2d> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
      const double s = 2.0 * std::numbers::pi * k / points;
      out.push_back(center_ + dirs.col(0) * lengths(0) * std::cos(s) +
                    dirs.col(1) * lengths(1) * std::sin(s));
    }
    return out;
  }

 private:
  Vector center_;
  Matrix v_;
  Index n_;
  double alpha_;
  Matrix shape_inv_;
  double radius2_ = 0;
};

inline ConfidenceEllipsoid ellipsoid(const Vector& center,
                                     const JackknifeACM& acm, double alpha) {
  return ConfidenceEllipsoid(center, acm.v, acm.n, alpha);
}

inline ConfidenceEllipsoid ellipsoid(const Vector& center, const Matrix& v,
                                     Index n, double alpha) {
  return ConfidenceEllipsoid(center, v, n, alpha);
}

inline ConfidenceInterval interval(double est, double v_ii, Index n,
                                   double alpha) {
  detail::require_probability(alpha, "alpha");
  if (v_ii < 0.0 || !std::isfinite(v_ii)) {
    std::ostringstream os;
    os << "variance " << v_ii << " is negative or non-finite";
    throw Error(ErrorKind::NegativeVariance, os.str());
  }
  if (n < 1) throw Error(ErrorKind::DomainError, "sample size must be positive");
  const double half =
      normal_quantile(1.0 - alpha / 2.0) * std::sqrt(v_ii / static_cast<double>(n));
  return {est - half, est + half, alpha};
}

}  // namespace mvcjack
