// Copyright 2026 The lsbo Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exact Gaussian-process regression with an isotropic Matern-5/2 kernel.
//
// Targets are standardised to zero mean and unit variance before
// conditioning; predictions are mapped back to the original scale. The
// hyperparameters (lengthscale, signal variance, noise variance) are fitted
// by multi-start projected gradient ascent on the log marginal likelihood,
// working in log space with box bounds.

#pragma once

#include "lsbo/core.hpp"

#include <array>
#include <limits>
#include <optional>
#include <vector>

namespace lsbo {

struct KernelParams {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-8;
};

inline constexpr double kJitterFloor = 1e-8;
inline constexpr double kJitterCeiling = 1e-4;

namespace detail {

inline double matern52_of_distance(const KernelParams& p, double r) {
  const double u = std::sqrt(5.0) * r / p.lengthscale;
  return p.signal_variance * (1.0 + u + u * u / 3.0) * std::exp(-u);
}

// d k / d log(lengthscale) at distance r.
inline double matern52_dlog_lengthscale(const KernelParams& p, double r) {
  const double u = std::sqrt(5.0) * r / p.lengthscale;
  return p.signal_variance * u * u * (1.0 + u) * std::exp(-u) / 3.0;
}

inline Mat pairwise_distances(const Mat& X) {
  const Eigen::Index n = X.rows();
  Mat R = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      R(i, j) = R(j, i) = (X.row(i) - X.row(j)).norm();
    }
  }
  return R;
}

inline Mat signal_matrix(const KernelParams& p, const Mat& R) {
  return R.unaryExpr([&](double r) { return matern52_of_distance(p, r); });
}

// Cholesky of K with jitter escalation 1e-8 -> 1e-4 (x10 steps). Returns the
// jitter actually added, or nullopt when every level fails.
inline std::optional<double> robust_cholesky(const Mat& K, Eigen::LLT<Mat>& llt) {
  llt.compute(K);
  if (llt.info() == Eigen::Success) return 0.0;
  const Eigen::Index n = K.rows();
  for (double jitter = kJitterFloor; jitter <= kJitterCeiling * 1.0000001; jitter *= 10.0) {
    llt.compute(K + jitter * Mat::Identity(n, n));
    if (llt.info() == Eigen::Success) return jitter;
  }
  return std::nullopt;
}

}  // namespace detail

/// k(x, x') = s^2 (1 + sqrt5 r/l + 5r^2/(3l^2)) exp(-sqrt5 r/l), r = |x - x'|.
inline double kernel_eval(const KernelParams& params, const Vec& x, const Vec& x2) {
  require_dim(x2.size(), x.size(), "kernel_eval");
  return detail::matern52_of_distance(params, (x - x2).norm());
}

/// Kernel matrix between the rows of A and the rows of B.
inline Mat kernel_matrix(const KernelParams& params, const Mat& A, const Mat& B) {
  require_dim(B.cols(), A.cols(), "kernel_matrix");
  Mat K(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      K(i, j) = detail::matern52_of_distance(params, (A.row(i) - B.row(j)).norm());
    }
  }
  return K;
}

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Log-parameter box for hyperparameter fitting.
struct HyperBounds {
  double log_lengthscale_lo = std::log(1e-3), log_lengthscale_hi = std::log(1e3);
  double log_signal_lo = std::log(1e-4), log_signal_hi = std::log(1e4);
  double log_noise_lo = std::log(kJitterFloor), log_noise_hi = std::log(1.0);
};

struct GPConfig {
  int restarts = 5;
  int max_iters = 100;
  std::uint64_t seed = 0;
  bool standardize = true;
  /// When set, the first restart starts here instead of the data heuristic.
  std::optional<KernelParams> initial;
  HyperBounds bounds;
};

/// A conditioned GP: training data, hyperparameters and the Cholesky factor
/// of K + noise I. Immutable once built.
class GPPosterior {
 public:
  /// Conditions on (X, y) with fixed hyperparameters. X is n x m (one point per row).
  static GPPosterior condition(Mat X, Vec y, const KernelParams& params, bool standardize = true) {
    if (X.rows() < 1) throw DimensionError("GPPosterior: need at least one observation");
    require_dim(y.size(), X.rows(), "GPPosterior targets");
    GPPosterior gp;
    gp.X_ = std::move(X);
    gp.y_ = std::move(y);
    gp.params_ = params;
    gp.standardize_targets(standardize);
    if (!gp.factorize(detail::pairwise_distances(gp.X_))) {
      throw NumericalError("GPPosterior: Cholesky failed after jitter escalation to 1e-4");
    }
    return gp;
  }

  Prediction predict(const Vec& x) const {
    require_dim(x.size(), X_.cols(), "GPPosterior::predict");
    Vec k(X_.rows());
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      k[i] = detail::matern52_of_distance(params_, (X_.row(i).transpose() - x).norm());
    }
    const double mean_std = k.dot(alpha_);
    const Vec v = llt_.matrixL().solve(k);
    const double kxx = params_.signal_variance;
    const double var_std = std::clamp(kxx - v.squaredNorm(), 0.0, kxx);
    return {y_mean_ + y_scale_ * mean_std, y_scale_ * y_scale_ * var_std};
  }

  /// Predictions for each row of Q.
  std::vector<Prediction> predict_many(const Mat& Q) const {
    require_dim(Q.cols(), X_.cols(), "GPPosterior::predict_many");
    const Mat K = kernel_matrix(params_, X_, Q);
    const Vec means = K.transpose() * alpha_;
    const Mat V = llt_.matrixL().solve(K);
    const Vec quad = V.colwise().squaredNorm().transpose();
    const double kxx = params_.signal_variance;
    std::vector<Prediction> out(static_cast<std::size_t>(Q.rows()));
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
      const double var_std = std::clamp(kxx - quad[i], 0.0, kxx);
      out[static_cast<std::size_t>(i)] = {y_mean_ + y_scale_ * means[i],
                                          y_scale_ * y_scale_ * var_std};
    }
    return out;
  }

  /// -1/2 y'alpha - sum log L_ii - n/2 log 2pi, on the standardised targets.
  double log_marginal_likelihood() const {
    const double n = static_cast<double>(X_.rows());
    const Mat& L = llt_.matrixLLT();
    return -0.5 * ys_.dot(alpha_) - L.diagonal().array().log().sum() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  }

  const KernelParams& params() const { return params_; }
  const Mat& inputs() const { return X_; }
  const Vec& targets() const { return y_; }
  const Vec& standardized_targets() const { return ys_; }
  const Vec& alpha() const { return alpha_; }
  Mat cholesky() const { return llt_.matrixL(); }
  double jitter() const { return jitter_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }
  double best_target() const { return y_.minCoeff(); }
  Eigen::Index size() const { return X_.rows(); }

 private:
  friend GPPosterior fit(const Mat& X, const Vec& y, const GPConfig& cfg);

  void standardize_targets(bool enabled) {
    y_mean_ = 0.0;
    y_scale_ = 1.0;
    if (enabled) {
      y_mean_ = y_.mean();
      const double var = (y_.array() - y_mean_).square().mean();
      if (var > 1e-24) y_scale_ = std::sqrt(var);
    }
    ys_ = (y_.array() - y_mean_) / y_scale_;
  }

  bool factorize(const Mat& R) {
    Mat K = detail::signal_matrix(params_, R);
    K.diagonal().array() += params_.noise_variance;
    const auto jitter = detail::robust_cholesky(K, llt_);
    if (!jitter) return false;
    jitter_ = *jitter;
    alpha_ = llt_.solve(ys_);
    return true;
  }

  Mat X_;
  Vec y_;
  Vec ys_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  KernelParams params_;
  Eigen::LLT<Mat> llt_;
  Vec alpha_;
  double jitter_ = 0.0;
};

inline Prediction posterior(const GPPosterior& gp, const Vec& x) { return gp.predict(x); }

inline double log_marginal_likelihood(const GPPosterior& gp) { return gp.log_marginal_likelihood(); }

namespace detail {

using LogParams = std::array<double, 3>;

inline KernelParams from_log(const LogParams& t) {
  return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2])};
}

inline LogParams to_log(const KernelParams& p) {
  return {std::log(p.lengthscale), std::log(p.signal_variance), std::log(p.noise_variance)};
}

inline LogParams clamp_log(LogParams t, const HyperBounds& b) {
  t[0] = std::clamp(t[0], b.log_lengthscale_lo, b.log_lengthscale_hi);
  t[1] = std::clamp(t[1], b.log_signal_lo, b.log_signal_hi);
  t[2] = std::clamp(t[2], b.log_noise_lo, b.log_noise_hi);
  return t;
}

// Objective of the hyperparameter search on fixed data.
class MarginalLikelihood {
 public:
  MarginalLikelihood(const Mat& R, const Vec& ys) : R_(R), ys_(ys) {}

  double value(const LogParams& t) {
    const KernelParams p = from_log(t);
    Mat K = signal_matrix(p, R_);
    K.diagonal().array() += p.noise_variance;
    if (!robust_cholesky(K, llt_)) return -std::numeric_limits<double>::infinity();
    alpha_ = llt_.solve(ys_);
    const double n = static_cast<double>(ys_.size());
    return -0.5 * ys_.dot(alpha_) - llt_.matrixLLT().diagonal().array().log().sum() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  }

  // Gradient at the parameters of the most recent successful value() call:
  // dL/dtheta_j = 1/2 tr((alpha alpha' - K^-1) dK/dtheta_j).
  LogParams gradient(const LogParams& t) const {
    const KernelParams p = from_log(t);
    const Eigen::Index n = ys_.size();
    Mat W = alpha_ * alpha_.transpose() - llt_.solve(Mat::Identity(n, n));
    const Mat dl = R_.unaryExpr([&](double r) { return matern52_dlog_lengthscale(p, r); });
    const Mat ds = signal_matrix(p, R_);
    LogParams g{};
    g[0] = 0.5 * W.cwiseProduct(dl).sum();
    g[1] = 0.5 * W.cwiseProduct(ds).sum();
    g[2] = 0.5 * p.noise_variance * W.trace();
    return g;
  }

 private:
  const Mat& R_;
  const Vec& ys_;
  Eigen::LLT<Mat> llt_;
  Vec alpha_;
};

// Projected gradient ascent with an adaptive step length (in log units).
inline std::pair<LogParams, double> ascend(MarginalLikelihood& ml, LogParams t,
                                           const HyperBounds& bounds, int max_iters) {
  t = clamp_log(t, bounds);
  double f = ml.value(t);
  if (!std::isfinite(f)) return {t, f};
  LogParams g = ml.gradient(t);
  double step = 0.5;
  for (int it = 0; it < max_iters && step > 1e-7; ++it) {
    const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (gnorm < 1e-9) break;
    LogParams cand;
    for (int j = 0; j < 3; ++j) cand[j] = t[j] + step * g[j] / gnorm;
    cand = clamp_log(cand, bounds);
    if (cand == t) break;
    const double fc = ml.value(cand);
    if (fc > f) {
      t = cand;
      f = fc;
      g = ml.gradient(t);
      step *= 1.6;
    } else {
      step *= 0.4;
    }
  }
  return {t, f};
}

inline double median_distance(const Mat& R) {
  std::vector<double> d;
  const Eigen::Index n = R.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) d.push_back(R(i, j));
  }
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

}  // namespace detail

/// Fits hyperparameters by maximising the log marginal likelihood and returns
/// the conditioned posterior. Deterministic given cfg.seed.
inline GPPosterior fit(const Mat& X, const Vec& y, const GPConfig& cfg = {}) {
  if (X.rows() < 2) throw DimensionError("fit: need at least two observations");
  require_dim(y.size(), X.rows(), "fit targets");
  if (!X.allFinite() || !y.allFinite()) throw DimensionError("fit: non-finite inputs");

  GPPosterior gp;
  gp.X_ = X;
  gp.y_ = y;
  gp.standardize_targets(cfg.standardize);
  const Mat R = detail::pairwise_distances(X);

  detail::MarginalLikelihood ml(R, gp.ys_);
  const double ell0 = detail::median_distance(R);
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  detail::LogParams best{};
  double best_f = -std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, cfg.restarts);
  for (int r = 0; r < restarts; ++r) {
    detail::LogParams start;
    if (r == 0) {
      start = cfg.initial ? detail::to_log(*cfg.initial)
                          : detail::LogParams{std::log(ell0), 0.0, std::log(1e-4)};
    } else {
      start = {std::log(ell0) + 2.0 * u(rng), 2.0 * u(rng), std::log(1e-4) + 4.0 * u(rng)};
    }
    auto [t, f] = detail::ascend(ml, start, cfg.bounds, cfg.max_iters);
    if (f > best_f) {
      best_f = f;
      best = t;
    }
  }
  if (!std::isfinite(best_f)) {
    throw NumericalError("fit: Cholesky failed after jitter escalation to 1e-4");
  }
  gp.params_ = detail::from_log(best);
  if (!gp.factorize(R)) {
    throw NumericalError("fit: Cholesky failed after jitter escalation to 1e-4");
  }
  return gp;
}

}  // namespace lsbo
