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

// Jackknife estimate of the asymptotic covariance of a plug-in statistic
// H(weighted mean of component k):
//
//   V = n * sum_i (theta_{i-} - theta)(theta_{i-} - theta)^T
//
// where theta_{i-} is the statistic recomputed without observation i, with
// the minimax weights rebuilt from the remaining concentrations. Note the
// leading factor is n, not the (n - 1) / n of the classical i.i.d. jackknife
// variance: V estimates the covariance of sqrt(n) (theta - true value).
//
// Two code paths compute V:
//   * FastJackknife: O(n) overall. Deleting row i changes Gamma by a rank-one
//     term, so the leave-one-out means follow from the full-sample means,
//     the weights a_i, and the leverage h_i = p_i^T Gamma^{-1} p_i.
//   * jackknife_acm_naive: rebuilds Gamma, the weights, and the means from
//     scratch for every deletion, O(n^2). Kept as the reference oracle.

#pragma once

#include <functional>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "mvcjack/error.hpp"
#include "mvcjack/mvc_core.hpp"
#include "mvcjack/parallel.hpp"

namespace mvcjack {

inline constexpr double kLeverageTolerance = 1e-10;

/// Smooth map from a d-vector of component means to a q-vector parameter.
/// `jacobian` is optional and returns the q x d derivative.
struct SmoothStatistic {
  Index dim_in = 0;
  Index dim_out = 0;
  std::function<Vector(const Vector&)> eval;
  std::function<Matrix(const Vector&)> jacobian;
};

/// Central-difference Jacobian of `stat.eval` at `mu`.
inline Matrix central_difference_jacobian(const SmoothStatistic& stat,
                                          const Vector& mu,
                                          double step = 1e-6) {
  Matrix jac(stat.dim_out, stat.dim_in);
  for (Index c = 0; c < stat.dim_in; ++c) {
    const double h = step * std::max(1.0, std::abs(mu(c)));
    Vector up = mu;
    Vector down = mu;
    up(c) += h;
    down(c) -= h;
    jac.col(c) = (stat.eval(up) - stat.eval(down)) / (2.0 * h);
  }
  return jac;
}

struct LeverageVector {
  Vector h;
};

struct JackknifeACM {
  Matrix v;
  Index component = 0;
  Index n = 0;
};

inline LeverageVector leverages(const ConcentrationMatrix& p,
                                const GramMatrix& g) {
  const auto& probs = p.probs();
  LeverageVector lev{Vector(p.n())};
  for (Index i = 0; i < p.n(); ++i) {
    const double h = probs.row(i) * g.inverse * probs.row(i).transpose();
    if (h >= 1.0 - kLeverageTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "observation " << i << " has leverage " << h
         << "; deleting it makes the Gram matrix singular";
      throw Error(ErrorKind::LeverageAtOne, os.str());
    }
    lev.h(i) = h;
  }
  return lev;
}

namespace detail {

inline void require_leverage_below_one(double h_i) {
  if (!(h_i < 1.0 - kLeverageTolerance)) {
    std::ostringstream os;
    os.precision(17);
    os << "leverage " << h_i << " is not below 1";
    throw Error(ErrorKind::LeverageAtOne, os.str());
  }
}

}  // namespace detail

/// (Gamma - p_i p_i^T)^{-1} by the Sherman-Morrison rank-one update.
inline Matrix loo_gram_inverse(const GramMatrix& g, const Vector& p_i,
                               double h_i) {
  detail::require_leverage_below_one(h_i);
  const Vector u = g.inverse * p_i;
  return g.inverse + (u * u.transpose()) / (1.0 - h_i);
}

/// Leave-one-out component means from the full-sample means:
///   means_{i-} = means + a_i (p_i^T means - xi_i^T) / (1 - h_i).
inline RowMatrix loo_mean_update(const ComponentMeans& means, const Vector& a_i,
                                 const Vector& p_i, double h_i,
                                 const Vector& xi_i) {
  detail::require_leverage_below_one(h_i);
  if (a_i.size() != means.M() || p_i.size() != means.M() ||
      xi_i.size() != means.d()) {
    throw Error(ErrorKind::DimensionMismatch,
                "loo_mean_update: inconsistent vector sizes");
  }
  const Eigen::RowVectorXd shift =
      (p_i.transpose() * means.means - xi_i.transpose()) / (1.0 - h_i);
  return means.means + a_i * shift;
}

namespace detail {

inline Vector evaluate_statistic(const SmoothStatistic& stat, const Vector& mu,
                                 Index component, Index deleted) {
  auto context = [&] {
    std::ostringstream os;
    os << "statistic failed for component " << component;
    if (deleted >= 0) {
      os << " with observation " << deleted << " deleted";
    } else {
      os << " on the full sample";
    }
    return os.str();
  };
  Vector out;
  try {
    out = stat.eval(mu);
  } catch (const Error& e) {
    throw Error(ErrorKind::StatisticEvaluation, context(), e);
  }
  if (out.size() != stat.dim_out || !out.allFinite()) {
    throw Error(ErrorKind::StatisticEvaluation,
                context() + ": non-finite or wrongly sized result");
  }
  return out;
}

/// n * sum_i (theta_i - theta)(theta_i - theta)^T with compensated sums,
/// accumulated in index order.
inline Matrix jackknife_sum(const RowMatrix& loo_estimates,
                            const Vector& estimate) {
  const Index n = loo_estimates.rows();
  const Index q = loo_estimates.cols();
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(q * q));
  Vector diff(q);
  for (Index i = 0; i < n; ++i) {
    diff = loo_estimates.row(i).transpose() - estimate;
    for (Index r = 0; r < q; ++r) {
      for (Index c = r; c < q; ++c) {
        acc[static_cast<std::size_t>(r * q + c)].add(diff(r) * diff(c));
      }
    }
  }
  Matrix v(q, q);
  for (Index r = 0; r < q; ++r) {
    for (Index c = r; c < q; ++c) {
      v(r, c) = static_cast<double>(n) *
                acc[static_cast<std::size_t>(r * q + c)].value();
      v(c, r) = v(r, c);
    }
  }
  return v;
}

inline void check_component(Index k, Index M) {
  if (k < 0 || k >= M) {
    std::ostringstream os;
    os << "component index " << k << " outside [0, " << M << ")";
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

inline void check_statistic(const SmoothStatistic& stat, Index d) {
  if (!stat.eval || stat.dim_in != d || stat.dim_out < 1) {
    std::ostringstream os;
    os << "statistic expects dimension " << stat.dim_in << ", data has " << d;
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

}  // namespace detail

/// Precomputes Gamma, the minimax weights, the leverages, and the
/// full-sample component means; `acm` then runs the O(n) leave-one-out pass.
class FastJackknife {
 public:
  FastJackknife(const ObservationMatrix& xi, const ConcentrationMatrix& p)
      : xi_(xi.data()), probs_(p.probs()) {
    if (xi.n() != p.n()) {
      std::ostringstream os;
      os << "observation rows (" << xi.n() << ") != concentration rows ("
         << p.n() << ")";
      throw Error(ErrorKind::DimensionMismatch, os.str());
    }
    gram_ = gram(p);
    weights_ = minimax_weights(p, gram_);
    leverages_ = leverages(p, gram_);
    means_ = weighted_means(xi, weights_);
  }

  const GramMatrix& gram_matrix() const noexcept { return gram_; }
  const WeightMatrix& weights() const noexcept { return weights_; }
  const LeverageVector& leverage() const noexcept { return leverages_; }
  const ComponentMeans& means() const noexcept { return means_; }
  Index n() const noexcept { return xi_.rows(); }
  Index M() const noexcept { return probs_.cols(); }

  /// Full-sample estimate H(mean of component k).
  Vector estimate(const SmoothStatistic& stat, Index k) const {
    detail::check_component(k, M());
    detail::check_statistic(stat, xi_.cols());
    return detail::evaluate_statistic(stat, means_.means.row(k).transpose(), k,
                                      -1);
  }

  /// Leave-one-out mean of component k with observation i deleted.
  Vector loo_mean(Index k, Index i) const {
    const Vector shift = loo_shift(i);
    return means_.means.row(k).transpose() + weights_.weights(i, k) * shift;
  }

  JackknifeACM acm(const SmoothStatistic& stat, Index k,
                   unsigned threads = 1) const {
    const Index ks[] = {k};
    return std::move(acm_components(stat, ks, threads).front());
  }

  /// Every component in one leave-one-out pass.
  std::vector<JackknifeACM> acm_all(const SmoothStatistic& stat,
                                    unsigned threads = 1) const {
    std::vector<Index> ks(static_cast<std::size_t>(M()));
    for (Index k = 0; k < M(); ++k) ks[static_cast<std::size_t>(k)] = k;
    return acm_components(stat, ks, threads);
  }

  std::vector<JackknifeACM> acm_components(const SmoothStatistic& stat,
                                           std::span<const Index> ks,
                                           unsigned threads = 1) const {
    detail::check_statistic(stat, xi_.cols());
    const Index n = this->n();
    const Index q = stat.dim_out;

    std::vector<Vector> estimates;
    std::vector<RowMatrix> loo(ks.size(), RowMatrix(n, q));
    for (Index k : ks) {
      detail::check_component(k, M());
      estimates.push_back(detail::evaluate_statistic(
          stat, means_.means.row(k).transpose(), k, -1));
    }

    parallel_chunks(n, threads, [&](std::int64_t begin, std::int64_t end) {
      Vector mu(xi_.cols());
      for (Index i = begin; i < end; ++i) {
        const Vector shift = loo_shift(i);
        for (std::size_t s = 0; s < ks.size(); ++s) {
          const Index k = ks[s];
          mu = means_.means.row(k).transpose() + weights_.weights(i, k) * shift;
          loo[s].row(i) = detail::evaluate_statistic(stat, mu, k, i).transpose();
        }
      }
    });

    std::vector<JackknifeACM> out;
    out.reserve(ks.size());
    for (std::size_t s = 0; s < ks.size(); ++s) {
      out.push_back({detail::jackknife_sum(loo[s], estimates[s]), ks[s], n});
    }
    return out;
  }

 private:
  // (p_i^T means - xi_i^T) / (1 - h_i); row k of the leave-one-out means is
  // means_k + a(i, k) * shift.
  Vector loo_shift(Index i) const {
    const double h = leverages_.h(i);
    return (means_.means.transpose() * probs_.row(i).transpose() -
            xi_.row(i).transpose()) /
           (1.0 - h);
  }

  RowMatrix xi_;
  RowMatrix probs_;
  GramMatrix gram_;
  WeightMatrix weights_;
  LeverageVector leverages_;
  ComponentMeans means_;
};

inline JackknifeACM jackknife_acm_fast(const ObservationMatrix& xi,
                                       const ConcentrationMatrix& p,
                                       const SmoothStatistic& stat, Index k,
                                       unsigned threads = 1) {
  return FastJackknife(xi, p).acm(stat, k, threads);
}

inline std::vector<JackknifeACM> jackknife_acm_fast_all(
    const ObservationMatrix& xi, const ConcentrationMatrix& p,
    const SmoothStatistic& stat, unsigned threads = 1) {
  return FastJackknife(xi, p).acm_all(stat, threads);
}

/// Reference implementation: for every i, zero row i of p and of the data,
/// rebuild Gamma_{i-}, a_{i-} = p_{i-} Gamma_{i-}^{-1}, and the weighted
/// means. O(n^2 (M^2 + M d)).
inline JackknifeACM jackknife_acm_naive(const ObservationMatrix& xi,
                                        const ConcentrationMatrix& p,
                                        const SmoothStatistic& stat, Index k) {
  if (xi.n() != p.n()) {
    throw Error(ErrorKind::DimensionMismatch,
                "observation and concentration row counts differ");
  }
  detail::check_component(k, p.M());
  detail::check_statistic(stat, xi.d());
  const Index n = xi.n();

  const GramMatrix full = gram(p);
  const WeightMatrix a = minimax_weights(p, full);
  const Vector estimate = detail::evaluate_statistic(
      stat, (a.weights.col(k).transpose() * xi.data()).transpose(), k, -1);

  RowMatrix loo_estimates(n, stat.dim_out);
  RowMatrix p_minus = p.probs();
  RowMatrix xi_minus = xi.data();
  for (Index i = 0; i < n; ++i) {
    p_minus.row(i).setZero();
    xi_minus.row(i).setZero();

    const Matrix gamma_minus = p_minus.transpose() * p_minus;
    Eigen::FullPivLU<Matrix> lu(gamma_minus);
    // det(Gamma_{i-}) / det(Gamma) = 1 - h_i.
    if (!(lu.determinant() / full.det > kLeverageTolerance)) {
      std::ostringstream os;
      os << "deleting observation " << i << " makes the Gram matrix singular";
      throw Error(ErrorKind::LeverageAtOne, os.str());
    }
    const Matrix gamma_minus_inv = lu.inverse();
    const Vector a_k = p_minus * gamma_minus_inv.col(k);
    Vector mu = Vector::Zero(xi.d());
    for (Index j = 0; j < n; ++j) {
      mu += a_k(j) * xi_minus.row(j).transpose();
    }
    loo_estimates.row(i) =
        detail::evaluate_statistic(stat, mu, k, i).transpose();

    p_minus.row(i) = p.probs().row(i);
    xi_minus.row(i) = xi.data().row(i);
  }
  return {detail::jackknife_sum(loo_estimates, estimate), k, n};
}

}  // namespace mvcjack
