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

// Triplet losses on latent codes, keyed by objective values.
//
// For a base i, positive j and negative k with |f_i - f_j| < eta <= |f_i - f_k|:
//   soft = ln(1 + exp(d+ - d-)) * w_ij * w_ik
//   w_ij = s(eta - |f_i - f_j|) / s(eta),  w_ik = s(|f_i - f_k| - eta) / s(1 - eta)
//   s(a) = tanh(a / (2 nu)),  d+ = |z_i - z_j|_p,  d- = |z_i - z_k|_p
// Objective values are min-max normalised to [0, 1] before any thresholding.

#pragma once

#include "lsbo/vae.hpp"

namespace lsbo {

struct DMLConfig {
  double eta = 0.01;
  double nu = 0.2;
  double rho = 0.1;
  double p = 2.0;
  int triplets_per_batch = 64;

  void validate() const {
    if (!(eta > 0.0 && eta < 1.0) || !(nu > 0.0) || !(rho > 0.0) || !(p >= 1.0) ||
        triplets_per_batch < 0) {
      throw std::invalid_argument("DMLConfig out of range");
    }
  }
};

struct PositiveNegative {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

inline PositiveNegative split_positive_negative(const std::vector<double>& f, std::size_t base,
                                                double eta) {
  if (base >= f.size()) throw std::out_of_range("split_positive_negative: base index");
  PositiveNegative out;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (j == base) continue;
    (std::abs(f[base] - f[j]) < eta ? out.positives : out.negatives).push_back(j);
  }
  return out;
}

/// Maps values affinely onto [0, 1]; a constant input maps to all zeros.
inline std::vector<double> minmax_normalize(const std::vector<double>& f) {
  if (f.empty()) return {};
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  const double a = *lo, span = *hi - *lo;
  std::vector<double> out(f.size(), 0.0);
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = (f[i] - a) / span;
  return out;
}

inline double lp_distance(const Vec& a, const Vec& b, double p) {
  require_dim(b.size(), a.size(), "lp_distance");
  if (p == 2.0) return (a - b).norm();
  return std::pow((a - b).array().abs().pow(p).sum(), 1.0 / p);
}

/// d |u|_p / du, with u = a - b; zero at u = 0.
inline Vec lp_distance_grad(const Vec& a, const Vec& b, double p) {
  const Vec u = a - b;
  const double n = lp_distance(a, b, p);
  if (!(n > 0.0)) return Vec::Zero(u.size());
  if (p == 2.0) return u / n;
  return (u.array().sign() * u.array().abs().pow(p - 1.0) / std::pow(n, p - 1.0)).matrix();
}

inline double hard_triplet_loss(const Vec& zb, const Vec& zp, const Vec& zn, double rho,
                                double p) {
  return std::max(0.0, lp_distance(zb, zp, p) + rho - lp_distance(zb, zn, p));
}

inline double smoother(double a, double nu) { return std::tanh(a / (2.0 * nu)); }

struct TripletWeights {
  double positive = 0.0;
  double negative = 0.0;
};

/// Clamped to [0, 1]; both are zero when the triplet is not admissible.
inline TripletWeights triplet_weights(double fi, double fj, double fk, const DMLConfig& cfg) {
  const double dp = std::abs(fi - fj), dn = std::abs(fi - fk);
  if (!(dp < cfg.eta) || !(dn >= cfg.eta)) return {};
  const double wp = smoother(cfg.eta - dp, cfg.nu) / smoother(cfg.eta, cfg.nu);
  const double wn = smoother(dn - cfg.eta, cfg.nu) / smoother(1.0 - cfg.eta, cfg.nu);
  return {std::clamp(wp, 0.0, 1.0), std::clamp(wn, 0.0, 1.0)};
}

inline double soft_triplet_loss(const Vec& zi, const Vec& zj, const Vec& zk, double fi, double fj,
                                double fk, const DMLConfig& cfg) {
  const TripletWeights w = triplet_weights(fi, fj, fk, cfg);
  if (w.positive == 0.0 || w.negative == 0.0) return 0.0;
  const double delta = lp_distance(zi, zj, cfg.p) - lp_distance(zi, zk, cfg.p);
  return softplus(delta) * w.positive * w.negative;
}

struct TripletGrad {
  double loss = 0.0;
  Vec gi, gj, gk;
};

inline TripletGrad soft_triplet_loss_grad(const Vec& zi, const Vec& zj, const Vec& zk, double fi,
                                          double fj, double fk, const DMLConfig& cfg) {
  TripletGrad g{0.0, Vec::Zero(zi.size()), Vec::Zero(zi.size()), Vec::Zero(zi.size())};
  const TripletWeights w = triplet_weights(fi, fj, fk, cfg);
  if (w.positive == 0.0 || w.negative == 0.0) return g;
  const double delta = lp_distance(zi, zj, cfg.p) - lp_distance(zi, zk, cfg.p);
  const double scale = w.positive * w.negative;
  g.loss = softplus(delta) * scale;
  const double s = sigmoid(delta) * scale;
  const Vec dpos = lp_distance_grad(zi, zj, cfg.p);
  const Vec dneg = lp_distance_grad(zi, zk, cfg.p);
  g.gi = s * (dpos - dneg);
  g.gj = -s * dpos;
  g.gk = s * dneg;
  return g;
}

struct Triplet {
  std::size_t i, j, k;
};

/// Samples up to `count` admissible triplets: base uniform over bases with a
/// non-empty positive and negative set, then positive and negative uniformly.
/// Draws nothing from rng when count is 0.
inline std::vector<Triplet> sample_triplets(const std::vector<double>& f, double eta, int count,
                                            Rng& rng) {
  std::vector<Triplet> out;
  if (count <= 0 || f.size() < 3) return out;
  std::vector<std::size_t> bases;
  std::vector<PositiveNegative> sets;
  for (std::size_t b = 0; b < f.size(); ++b) {
    auto pn = split_positive_negative(f, b, eta);
    if (!pn.positives.empty() && !pn.negatives.empty()) {
      bases.push_back(b);
      sets.push_back(std::move(pn));
    }
  }
  if (bases.empty()) return out;
  for (int t = 0; t < count; ++t) {
    const auto bi = std::uniform_int_distribution<std::size_t>(0, bases.size() - 1)(rng);
    const auto& pn = sets[bi];
    const auto j = std::uniform_int_distribution<std::size_t>(0, pn.positives.size() - 1)(rng);
    const auto k = std::uniform_int_distribution<std::size_t>(0, pn.negatives.size() - 1)(rng);
    out.push_back({bases[bi], pn.positives[j], pn.negatives[k]});
  }
  return out;
}

/// Mean soft-triplet loss over `triplets` on the columns of Z and its gradient
/// with respect to Z.
inline std::pair<double, Mat> metric_term(const Mat& Z, const std::vector<double>& f,
                                          const std::vector<Triplet>& triplets,
                                          const DMLConfig& cfg) {
  Mat dZ = Mat::Zero(Z.rows(), Z.cols());
  if (triplets.empty()) return {0.0, dZ};
  const double inv = 1.0 / static_cast<double>(triplets.size());
  double total = 0.0;
  for (const auto& t : triplets) {
    const auto i = static_cast<Eigen::Index>(t.i), j = static_cast<Eigen::Index>(t.j),
               k = static_cast<Eigen::Index>(t.k);
    const TripletGrad g = soft_triplet_loss_grad(Z.col(i), Z.col(j), Z.col(k), f[t.i], f[t.j],
                                                 f[t.k], cfg);
    total += g.loss;
    dZ.col(i) += inv * g.gi;
    dZ.col(j) += inv * g.gj;
    dZ.col(k) += inv * g.gk;
  }
  return {total * inv, dZ};
}

/// ELBO plus the metric term on one column batch with frozen noise. `f` holds
/// the normalised objective values of the batch columns.
inline std::pair<double, Vec> dml_elbo_with_grad(const VAEModel& m, const Mat& X,
                                                 const std::vector<double>& f, double beta,
                                                 const Mat& noise,
                                                 const std::vector<Triplet>& triplets,
                                                 const DMLConfig& cfg) {
  require_dim(static_cast<Eigen::Index>(f.size()), X.cols(), "dml_elbo values");
  const ElboPass p = elbo_forward(m, X, beta, noise);
  const auto [metric, dZ] = metric_term(p.z, f, triplets, cfg);
  return {p.terms.loss + metric, elbo_backward(m, p, beta, &dZ)};
}

inline double dml_elbo(const VAEModel& m, const Mat& X, const std::vector<double>& f, double beta,
                       const Mat& noise, const std::vector<Triplet>& triplets,
                       const DMLConfig& cfg) {
  const ElboPass p = elbo_forward(m, X, beta, noise);
  return p.terms.loss + metric_term(p.z, f, triplets, cfg).first;
}

/// Warm-start retraining on a labelled set with the DML-augmented loss.
/// Values are normalised over the whole labelled set; triplets are drawn within
/// each mini-batch after its reparameterisation noise. With
/// triplets_per_batch = 0 this is bit-identical to retrain().
inline TrainResult dml_retrain(const VAEModel& model, const Mat& labelled_x,
                               const std::vector<double>& labelled_f, const TrainConfig& cfg,
                               const DMLConfig& dml) {
  dml.validate();
  if (labelled_x.rows() == 0) throw std::invalid_argument("dml_retrain: empty labelled set");
  require_dim(static_cast<Eigen::Index>(labelled_f.size()), labelled_x.rows(), "dml_retrain");
  const std::vector<double> fn = minmax_normalize(labelled_f);
  TrainConfig c = cfg;
  c.schedule.reset();
  BatchObjective obj = [&](const VAEModel& m, const Mat& Xb, const std::vector<Eigen::Index>& idx,
                           double beta, Rng& rng) -> std::pair<double, Vec> {
    Mat noise(m.d, Xb.cols());
    for (Eigen::Index j = 0; j < Xb.cols(); ++j) noise.col(j) = standard_normal(m.d, rng);
    std::vector<double> fb(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) fb[j] = fn[static_cast<std::size_t>(idx[j])];
    const auto triplets = sample_triplets(fb, dml.eta, dml.triplets_per_batch, rng);
    return dml_elbo_with_grad(m, Xb, fb, beta, noise, triplets, dml);
  };
  return train_with(model, labelled_x, c, obj);
}

}  // namespace lsbo
