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

// Orthogonal (total least squares) regression per mixture component when
// both X and Y carry measurement error of equal variance.
//
// Each observation is expanded to (X, Y, X^2, Y^2, XY); the weighted means of
// these five columns determine the component's centered second moments and
// hence the fitted line, so the fit is a smooth function of the component
// mean vector and its covariance comes from the jackknife.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "mvcjack/error.hpp"
#include "mvcjack/jackknife.hpp"
#include "mvcjack/mvc_core.hpp"

namespace mvcjack {

inline constexpr Index kMomentDim = 5;
inline constexpr double kMomentTolerance = 1e-9;

struct PairedSample {
  Vector x;
  Vector y;
  ConcentrationMatrix concentrations;

  Index n() const noexcept { return x.size(); }
  Index M() const noexcept { return concentrations.M(); }
};

inline PairedSample make_paired_sample(Vector x, Vector y,
                                       ConcentrationMatrix p) {
  if (x.size() != y.size() || x.size() != p.n() || x.size() == 0) {
    std::ostringstream os;
    os << "sample sizes differ: x " << x.size() << ", y " << y.size()
       << ", concentrations " << p.n();
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw Error(ErrorKind::NonFiniteValue, "sample contains non-finite values");
  }
  return PairedSample{std::move(x), std::move(y), std::move(p)};
}

/// Weighted means of (X, Y, X^2, Y^2, XY) for one component.
struct MomentVector {
  double m_x = 0, m_y = 0, m_xx = 0, m_yy = 0, m_xy = 0;

  static MomentVector from(const Vector& mu) {
    if (mu.size() != kMomentDim) {
      throw Error(ErrorKind::DimensionMismatch,
                  "moment vector must have 5 entries");
    }
    return {mu(0), mu(1), mu(2), mu(3), mu(4)};
  }
};

struct CenteredMoments {
  double s_xx = 0, s_yy = 0, s_xy = 0, m_x = 0, m_y = 0;
};

struct RegressionCoefficients {
  double b0 = 0;  // intercept
  double b1 = 0;  // slope
  Index component = 0;
};

/// n x 5 matrix with columns X, Y, X^2, Y^2, X*Y.
inline ObservationMatrix expand_observations(const PairedSample& s) {
  RowMatrix out(s.n(), kMomentDim);
  for (Index j = 0; j < s.n(); ++j) {
    const double x = s.x(j);
    const double y = s.y(j);
    out.row(j) << x, y, x * x, y * y, x * y;
  }
  return ObservationMatrix(std::move(out));
}

inline CenteredMoments centered_moments(const Vector& mu) {
  const MomentVector m = MomentVector::from(mu);
  return {m.m_xx - m.m_x * m.m_x, m.m_yy - m.m_y * m.m_y,
          m.m_xy - m.m_x * m.m_y, m.m_x, m.m_y};
}

/// Whether the centered second moments are nonnegative up to a relative
/// tolerance. Minimax weights can be negative, so a weighted variance of a
/// low-variance component may come out slightly negative in finite samples;
/// the slope formula stays well defined, so this is a diagnostic only.
inline bool moments_near_psd(const Vector& mu) {
  const CenteredMoments s = centered_moments(mu);
  return s.s_xx >= -kMomentTolerance * std::abs(mu(2)) &&
         s.s_yy >= -kMomentTolerance * std::abs(mu(3));
}

/// Slope of the line minimizing the sum of squared perpendicular distances:
///   b1 = (S_YY - S_XX + sqrt((S_XX - S_YY)^2 + 4 S_XY^2)) / (2 S_XY).
/// Evaluated in the cancellation-free form when S_YY < S_XX.
inline double orthogonal_slope(double s_xx, double s_yy, double s_xy) {
  const double diff = s_yy - s_xx;
  const double root = std::sqrt(diff * diff + 4.0 * s_xy * s_xy);
  if (diff >= 0.0) return (diff + root) / (2.0 * s_xy);
  return 2.0 * s_xy / (root - diff);
}

inline RegressionCoefficients orthogonal_fit(const CenteredMoments& s,
                                             Index component = 0) {
  const double guard =
      1e-12 * std::max({std::abs(s.s_xx), std::abs(s.s_yy), 1.0});
  if (!(std::abs(s.s_xy) > guard)) {
    std::ostringstream os;
    os << "|S_XY| = " << std::abs(s.s_xy) << " <= " << guard
       << "; slope undefined";
    throw Error(ErrorKind::DegenerateSlope, os.str());
  }
  const double b1 = orthogonal_slope(s.s_xx, s.s_yy, s.s_xy);
  return {s.m_y - b1 * s.m_x, b1, component};
}

inline RegressionCoefficients orthogonal_fit(double s_xx, double s_yy,
                                             double s_xy, double m_x,
                                             double m_y) {
  return orthogonal_fit(CenteredMoments{s_xx, s_yy, s_xy, m_x, m_y});
}

/// Analytic 2 x 5 Jacobian of (b0, b1) with respect to the raw moments.
inline Matrix regression_jacobian(const Vector& mu) {
  const CenteredMoments s = centered_moments(mu);
  const double b1 = orthogonal_slope(s.s_xx, s.s_yy, s.s_xy);
  const double diff = s.s_yy - s.s_xx;
  const double root = std::sqrt(diff * diff + 4.0 * s.s_xy * s.s_xy);

  const double d_syy = (1.0 + diff / root) / (2.0 * s.s_xy);
  const double d_sxx = -d_syy;
  const double d_sxy = 2.0 / root - b1 / s.s_xy;

  // dS/dmu, rows S_XX, S_YY, S_XY.
  Eigen::Matrix<double, 3, 5> ds;
  ds << -2.0 * s.m_x, 0.0, 1.0, 0.0, 0.0,
        0.0, -2.0 * s.m_y, 0.0, 1.0, 0.0,
        -s.m_y, -s.m_x, 0.0, 0.0, 1.0;
  const Eigen::RowVector3d db1_ds(d_sxx, d_syy, d_sxy);
  const Eigen::Matrix<double, 1, 5> db1 = db1_ds * ds;

  Matrix jac(2, kMomentDim);
  jac.row(1) = db1;
  jac.row(0) = -s.m_x * db1;
  jac(0, 0) -= b1;
  jac(0, 1) += 1.0;
  return jac;
}

/// H: (m_X, m_Y, m_XX, m_YY, m_XY) -> (b0, b1) for component k.
inline SmoothStatistic regression_statistic(Index k = 0) {
  SmoothStatistic stat;
  stat.dim_in = kMomentDim;
  stat.dim_out = 2;
  stat.eval = [k](const Vector& mu) {
    const RegressionCoefficients b = orthogonal_fit(centered_moments(mu), k);
    Vector out(2);
    out << b.b0, b.b1;
    return out;
  };
  stat.jacobian = [](const Vector& mu) { return regression_jacobian(mu); };
  return stat;
}

struct ComponentFit {
  RegressionCoefficients coefficients;
  JackknifeACM acm;
};

/// Shares the Gram matrix, weights, and leverages across components.
class EivFitter {
 public:
  explicit EivFitter(const PairedSample& s)
      : jackknife_(expand_observations(s), s.concentrations) {}

  Index n() const noexcept { return jackknife_.n(); }
  Index M() const noexcept { return jackknife_.M(); }
  const FastJackknife& jackknife() const noexcept { return jackknife_; }

  ComponentFit fit(Index k, unsigned threads = 1) const {
    const SmoothStatistic stat = regression_statistic(k);
    const Vector theta = jackknife_.estimate(stat, k);
    return {RegressionCoefficients{theta(0), theta(1), k},
            jackknife_.acm(stat, k, threads)};
  }

 private:
  FastJackknife jackknife_;
};

/// Coefficients and jackknife covariance for every component. Errors are
/// rethrown with the failing component named.
inline std::vector<ComponentFit> fit_mixture_eiv(const PairedSample& s,
                                                 unsigned threads = 1) {
  const EivFitter fitter(s);
  std::vector<ComponentFit> out;
  out.reserve(static_cast<std::size_t>(fitter.M()));
  for (Index k = 0; k < fitter.M(); ++k) {
    try {
      out.push_back(fitter.fit(k, threads));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "component " << k;
      throw Error(e.kind(), os.str(), e);
    }
  }
  return out;
}

}  // namespace mvcjack
