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

// Gaussian VAE with a unit-variance Gaussian decoder.
//
// The encoder emits 2d outputs per datum: rows [0, d) are the mean, rows
// [d, 2d) the log-variance. Loss per batch (minimised):
//   recon = mean_b 1/2 |x_b - f(z_b)|^2,  z_b = mu_b + sqrt(sigma2_b) * xi_b
//   kl    = mean_b 1/2 sum_i (sigma2 + mu^2 - 1 - log sigma2)
//   loss  = recon + beta * kl

#pragma once

#include "lsbo/nn.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace lsbo {

struct VAEModel {
  MLP encoder;
  MLP decoder;
  int D = 0;
  int d = 0;
};

struct VAEArchitecture {
  std::string name;
  int D = 0;
  int d = 0;
  std::vector<int> hidden;  // encoder hidden widths; decoder mirrors them
};

inline const std::vector<VAEArchitecture>& vae_architectures() {
  static const std::vector<VAEArchitecture> table = {
      {"VAE-4.1", 10, 5, {}},       {"VAE-4.2", 10, 2, {5}},   {"VAE-4.3", 100, 2, {30}},
      {"VAE-4.4", 100, 10, {32}},   {"VAE-4.5", 100, 50, {}},  {"VAE-4.6", 100, 5, {25}},
  };
  return table;
}

inline VAEArchitecture vae_architecture(const std::string& name) {
  for (const auto& a : vae_architectures()) {
    if (a.name == name) return a;
  }
  throw std::invalid_argument("unknown VAE architecture: " + name);
}

inline VAEModel make_vae(int D, int d, const std::vector<int>& hidden, std::uint64_t seed) {
  if (d < 1 || D < 1 || d >= D) throw DimensionError("make_vae: need 1 <= d < D");
  Rng rng(seed);
  std::vector<int> enc{D};
  enc.insert(enc.end(), hidden.begin(), hidden.end());
  enc.push_back(2 * d);
  std::vector<int> dec{d};
  dec.insert(dec.end(), hidden.rbegin(), hidden.rend());
  dec.push_back(D);
  VAEModel m;
  m.encoder = MLP(enc, rng);
  m.decoder = MLP(dec, rng);
  m.D = D;
  m.d = d;
  return m;
}

inline VAEModel make_vae(const VAEArchitecture& arch, std::uint64_t seed) {
  return make_vae(arch.D, arch.d, arch.hidden, seed);
}

inline Vec vae_params(const VAEModel& m) {
  Vec p(m.encoder.num_params() + m.decoder.num_params());
  p << m.encoder.flat_params(), m.decoder.flat_params();
  return p;
}

inline void set_vae_params(VAEModel& m, const Vec& p) {
  const auto ne = m.encoder.num_params();
  require_dim(p.size(), ne + m.decoder.num_params(), "set_vae_params");
  m.encoder.set_flat_params(p.head(ne));
  m.decoder.set_flat_params(p.tail(p.size() - ne));
}

struct Encoding {
  Vec mu;
  Vec sigma2;
};

inline Encoding encode(const VAEModel& m, const Vec& x) {
  require_dim(x.size(), m.D, "encode");
  const Vec out = m.encoder(x);
  return {out.head(m.d), out.tail(m.d).array().exp()};
}

/// Posterior means for every row of X (n x D) -> n x d.
inline Mat encode_means(const VAEModel& m, const Mat& X) {
  require_dim(X.cols(), m.D, "encode_means");
  const Mat out = m.encoder.predict(X.transpose());
  return out.topRows(m.d).transpose();
}

inline Vec reparameterize(const Vec& mu, const Vec& sigma2, const Vec& noise) {
  require_dim(sigma2.size(), mu.size(), "reparameterize");
  require_dim(noise.size(), mu.size(), "reparameterize");
  return mu.array() + sigma2.array().sqrt() * noise.array();
}

inline Vec decode(const VAEModel& m, const Vec& z) {
  require_dim(z.size(), m.d, "decode");
  return m.decoder(z);
}

/// Decoder mean plus unit-variance Gaussian observation noise.
inline Vec decode_sample(const VAEModel& m, const Vec& z, Rng& rng) {
  return decode(m, z) + standard_normal(m.D, rng);
}

/// KL(N(mu, diag sigma2) || N(0, I)).
inline double kl_divergence(const Vec& mu, const Vec& sigma2) {
  require_dim(sigma2.size(), mu.size(), "kl_divergence");
  return 0.5 * (sigma2.array() + mu.array().square() - 1.0 - sigma2.array().log()).sum();
}

struct ElboTerms {
  double recon = 0.0;
  double kl = 0.0;
  double loss = 0.0;
};

/// Forward state of one ELBO evaluation on a column batch.
struct ElboPass {
  ElboTerms terms;
  Tape enc;
  Tape dec;
  Mat mu, logvar, noise, z, xhat, x;
};

inline ElboPass elbo_forward(const VAEModel& m, const Mat& X, double beta, const Mat& noise) {
  require_dim(X.rows(), m.D, "elbo batch");
  require_dim(noise.rows(), m.d, "elbo noise");
  require_dim(noise.cols(), X.cols(), "elbo noise batch");
  if (X.cols() == 0) throw DimensionError("elbo: empty batch");
  const double B = static_cast<double>(X.cols());
  ElboPass p;
  p.x = X;
  p.noise = noise;
  p.enc = m.encoder.forward(X);
  p.mu = p.enc.output.topRows(m.d);
  p.logvar = p.enc.output.bottomRows(m.d);
  p.z = p.mu.array() + (0.5 * p.logvar.array()).exp() * noise.array();
  p.dec = m.decoder.forward(p.z);
  p.xhat = p.dec.output;
  p.terms.recon = 0.5 * (X - p.xhat).squaredNorm() / B;
  p.terms.kl =
      0.5 * (p.logvar.array().exp() + p.mu.array().square() - 1.0 - p.logvar.array()).sum() / B;
  p.terms.loss = p.terms.recon + beta * p.terms.kl;
  return p;
}

inline ElboTerms elbo(const VAEModel& m, const Mat& X, double beta, const Mat& noise) {
  return elbo_forward(m, X, beta, noise).terms;
}

inline ElboTerms elbo(const VAEModel& m, const Mat& X, double beta, Rng& rng) {
  Mat noise(m.d, X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) noise.col(j) = standard_normal(m.d, rng);
  return elbo(m, X, beta, noise);
}

/// Gradient of pass.terms.loss (plus an optional extra term whose gradient
/// with respect to the latent samples is dz_extra) in vae_params() layout.
inline Vec elbo_backward(const VAEModel& m, const ElboPass& p, double beta,
                         const Mat* dz_extra = nullptr) {
  const double B = static_cast<double>(p.x.cols());
  const Mat g_out = (p.xhat - p.x) / B;
  const Gradients gd = m.decoder.backward(p.dec, g_out);
  Mat dz = gd.d_input;
  if (dz_extra) dz += *dz_extra;
  const Mat sd = (0.5 * p.logvar.array()).exp();
  Mat g_enc(2 * m.d, p.x.cols());
  g_enc.topRows(m.d) = dz + (beta / B) * p.mu;
  g_enc.bottomRows(m.d) = (dz.array() * p.noise.array() * sd.array() * 0.5 +
                           (beta / B) * 0.5 * (p.logvar.array().exp() - 1.0))
                              .matrix();
  const Gradients ge = m.encoder.backward(p.enc, g_enc);
  Vec g(m.encoder.num_params() + m.decoder.num_params());
  g << ge.flat(), gd.flat();
  return g;
}

struct BetaSchedule {
  double beta_i = 0.0;
  double beta_f = 1.0;
  int beta_s = 10;
  double beta_a = 0.1;
};

inline double beta_at(const BetaSchedule& s, int epoch) {
  const double steps = std::floor(static_cast<double>(epoch) / static_cast<double>(s.beta_s));
  return std::clamp(s.beta_i + steps * s.beta_a, s.beta_i, s.beta_f);
}

struct TrainConfig {
  int epochs = 1;
  int batch = 256;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::optional<BetaSchedule> schedule;
  double beta = 1.0;  // used when no schedule is given

  void validate() const {
    if (epochs < 0 || batch < 1 || !(lr >= 0.0)) {
      throw std::invalid_argument("TrainConfig: epochs >= 0, batch >= 1, lr >= 0");
    }
    if (schedule && schedule->beta_s < 1) throw std::invalid_argument("beta_s must be >= 1");
  }
};

/// Pre-training settings by ambient dimension (10-D or 100-D models).
inline TrainConfig pretrain_config(int D, std::uint64_t seed) {
  TrainConfig c;
  c.epochs = D <= 10 ? 150 : 300;
  c.batch = D <= 10 ? 256 : 1024;
  c.lr = 1e-3;
  c.seed = seed;
  c.schedule = BetaSchedule{};
  return c;
}

inline int pretrain_pool_size(int D) { return D <= 10 ? 10000 : 50000; }

inline TrainConfig retrain_config(int D, std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 2;
  c.batch = D <= 10 ? 128 : 256;
  c.lr = 1e-3;
  c.seed = seed;
  c.beta = 1.0;
  return c;
}

struct TrainResult {
  VAEModel model;
  std::vector<double> loss_history;  // sample-weighted mean loss per epoch
};

/// Batch objective: given the model, the column batch, the row indices it was
/// drawn from, beta and the trainer's stream, returns (loss, gradient).
using BatchObjective = std::function<std::pair<double, Vec>(
    const VAEModel&, const Mat&, const std::vector<Eigen::Index>&, double, Rng&)>;

inline std::pair<double, Vec> plain_elbo_objective(const VAEModel& m, const Mat& Xb,
                                                   const std::vector<Eigen::Index>&, double beta,
                                                   Rng& rng) {
  Mat noise(m.d, Xb.cols());
  for (Eigen::Index j = 0; j < Xb.cols(); ++j) noise.col(j) = standard_normal(m.d, rng);
  const ElboPass p = elbo_forward(m, Xb, beta, noise);
  return {p.terms.loss, elbo_backward(m, p, beta)};
}

/// Shuffled mini-batch Adam over the rows of `data` (n x D) with a fresh
/// optimiser state.
inline TrainResult train_with(const VAEModel& model, const Mat& data, const TrainConfig& cfg,
                              const BatchObjective& objective) {
  cfg.validate();
  if (data.rows() == 0) throw std::invalid_argument("train: empty data");
  require_dim(data.cols(), model.D, "train data");
  TrainResult out{model, {}};
  if (cfg.epochs == 0) return out;
  Rng rng(cfg.seed);
  Vec params = vae_params(out.model);
  AdamState adam = AdamState::for_size(params.size(), cfg.lr);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int e = 0; e < cfg.epochs; ++e) {
    const double beta = cfg.schedule ? beta_at(*cfg.schedule, e) : cfg.beta;
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(stop));
      Mat Xb(model.D, static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) {
        Xb.col(static_cast<Eigen::Index>(j)) = data.row(idx[j]).transpose();
      }
      const auto [loss, grad] = objective(out.model, Xb, idx, beta, rng);
      total += loss * static_cast<double>(idx.size());
      params = adam_step(adam, params, grad);
      set_vae_params(out.model, params);
    }
    out.loss_history.push_back(total / static_cast<double>(order.size()));
  }
  return out;
}

inline TrainResult train(const VAEModel& model, const Mat& data, const TrainConfig& cfg) {
  return train_with(model, data, cfg, plain_elbo_objective);
}

/// Warm-start continuation on the x-components of a labelled set.
inline TrainResult retrain(const VAEModel& model, const Mat& labelled_x, const TrainConfig& cfg) {
  if (labelled_x.rows() == 0) throw std::invalid_argument("retrain: empty labelled set");
  TrainConfig c = cfg;
  c.schedule.reset();
  return train(model, labelled_x, c);
}

/// Unclipped draws (n x D) from N(center, s^2 [(1 - rho) I + rho 11^T]).
inline Mat correlated_gaussian(const Vec& center, double s, double rho, int n, Rng& rng) {
  const Eigen::Index D = center.size();
  Mat out(n, D);
  const double a = std::sqrt(1.0 - rho), b = std::sqrt(rho);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double shared = g(rng);
    for (Eigen::Index j = 0; j < D; ++j) out(i, j) = center[j] + s * (a * g(rng) + b * shared);
  }
  return out;
}

inline constexpr double kTrainingCorrelation = 0.9;

/// Highly correlated pre-training pool, clipped to the domain (M x D).
inline Mat generate_training_data(int D, int M, const Box& domain, std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("generate_training_data: M >= 1");
  require_dim(domain.dim(), D, "generate_training_data");
  Rng rng(seed);
  const double s = 0.25 * domain.width().mean();
  Mat X = correlated_gaussian(domain.center(), s, kTrainingCorrelation, M, rng);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    X.row(i) = clip_to_domain(X.row(i).transpose(), domain).transpose();
  }
  return X;
}

namespace detail {
inline constexpr char kVaeMagic[8] = {'L', 'S', 'B', 'O', 'V', 'A', 'E', '1'};
}

inline void write_vae(std::ostream& os, const VAEModel& m) {
  os.write(detail::kVaeMagic, 8);
  detail::put_u32(os, static_cast<std::uint32_t>(m.D));
  detail::put_u32(os, static_cast<std::uint32_t>(m.d));
  write_mlp(os, m.encoder);
  write_mlp(os, m.decoder);
}

inline VAEModel read_vae(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::kVaeMagic, 8) != 0) {
    throw std::runtime_error("not a VAE stream");
  }
  VAEModel m;
  m.D = static_cast<int>(detail::get_u32(is));
  m.d = static_cast<int>(detail::get_u32(is));
  m.encoder = read_mlp(is);
  m.decoder = read_mlp(is);
  if (m.encoder.input_dim() != m.D || m.encoder.output_dim() != 2 * m.d ||
      m.decoder.input_dim() != m.d || m.decoder.output_dim() != m.D) {
    throw std::runtime_error("VAE stream: inconsistent shapes");
  }
  return m;
}

inline void save_vae(const std::string& path, const VAEModel& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_vae(os, m);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline VAEModel load_vae(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_vae(is);
}

}  // namespace lsbo
