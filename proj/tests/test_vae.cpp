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


#include "lsbo/vae.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace lsbo {
namespace {

// KL(N(mu, s2) || N(0, 1)) by Simpson quadrature of q log(q / p).
double kl_quadrature_1d(double mu, double s2) {
  const double sd = std::sqrt(s2);
  const double lo = mu - 14 * sd, hi = mu + 14 * sd;
  const int n = 200000;
  const double h = (hi - lo) / n;
  auto f = [&](double x) {
    const double lq = -0.5 * std::log(2 * std::numbers::pi * s2) - 0.5 * (x - mu) * (x - mu) / s2;
    const double lp = -0.5 * std::log(2 * std::numbers::pi) - 0.5 * x * x;
    return std::exp(lq) * (lq - lp);
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

TEST(KL, MatchesQuadrature) {
  Rng rng(12);
  std::uniform_real_distribution<double> m(-2.0, 2.0), v(0.1, 3.0);
  for (int t = 0; t < 10; ++t) {
    const int d = 1 + t % 3;
    Vec mu(d), s2(d);
    double want = 0.0;
    for (int i = 0; i < d; ++i) {
      mu[i] = m(rng);
      s2[i] = v(rng);
      want += kl_quadrature_1d(mu[i], s2[i]);
    }
    EXPECT_NEAR(kl_divergence(mu, s2), want, 1e-6);
  }
}

TEST(KL, ZeroForStandardNormal) {
  EXPECT_EQ(kl_divergence(Vec::Zero(1), Vec::Ones(1)), 0.0);
  EXPECT_EQ(kl_divergence(Vec::Zero(4), Vec::Ones(4)), 0.0);
}

Mat random_batch(int D, int B, Rng& rng) {
  Mat X(D, B);
  for (int j = 0; j < B; ++j) X.col(j) = standard_normal(D, rng);
  return X;
}

TEST(Elbo, GradientMatchesFiniteDifferences) {
  for (const auto& hidden : {std::vector<int>{}, std::vector<int>{4}}) {
    Rng rng(21);
    VAEModel m = make_vae(6, 2, hidden, 8);
    const Mat X = random_batch(6, 5, rng);
    const Mat noise = random_batch(2, 5, rng);
    const double beta = 0.7;
    const Vec g = elbo_backward(m, elbo_forward(m, X, beta, noise), beta);
    const Vec p0 = vae_params(m);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < p0.size(); ++i) {
      Vec p = p0;
      p[i] += h;
      set_vae_params(m, p);
      const double up = elbo(m, X, beta, noise).loss;
      p[i] -= 2 * h;
      set_vae_params(m, p);
      const double dn = elbo(m, X, beta, noise).loss;
      const double fd = (up - dn) / (2 * h);
      EXPECT_NEAR(g[i], fd, 1e-3 * std::max(std::abs(fd), 1e-3)) << i;
    }
    set_vae_params(m, p0);
  }
}

TEST(Elbo, TermsAreConsistent) {
  Rng rng(2);
  const VAEModel m = make_vae(5, 2, {3}, 1);
  const Mat X = random_batch(5, 4, rng);
  const Mat noise = Mat::Zero(2, 4);
  const ElboTerms t = elbo(m, X, 0.5, noise);
  double recon = 0.0, kl = 0.0;
  for (int j = 0; j < 4; ++j) {
    const Encoding e = encode(m, X.col(j));
    recon += 0.5 * (X.col(j) - decode(m, e.mu)).squaredNorm();
    kl += kl_divergence(e.mu, e.sigma2);
  }
  EXPECT_NEAR(t.recon, recon / 4, 1e-12);
  EXPECT_NEAR(t.kl, kl / 4, 1e-12);
  EXPECT_NEAR(t.loss, t.recon + 0.5 * t.kl, 1e-12);
}

TEST(Architectures, TableShapes) {
  ASSERT_EQ(vae_architectures().size(), 6u);
  const VAEModel m = make_vae(vae_architecture("VAE-4.4"), 1);
  EXPECT_EQ(m.encoder.widths(), (std::vector<int>{100, 32, 20}));
  EXPECT_EQ(m.decoder.widths(), (std::vector<int>{10, 32, 100}));
  const VAEModel s = make_vae(vae_architecture("VAE-4.5"), 1);
  EXPECT_EQ(s.encoder.widths(), (std::vector<int>{100, 100}));
  EXPECT_THROW(vae_architecture("VAE-9"), std::invalid_argument);
  EXPECT_THROW(make_vae(3, 3, {}, 0), DimensionError);
}

TEST(Encode, MeansAgreeWithSingleEncode) {
  Rng rng(6);
  const VAEModel m = make_vae(vae_architecture("VAE-4.2"), 3);
  Mat X(4, 10);
  for (int i = 0; i < 4; ++i) X.row(i) = standard_normal(10, rng).transpose();
  const Mat Z = encode_means(m, X);
  ASSERT_EQ(Z.rows(), 4);
  ASSERT_EQ(Z.cols(), 2);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT((Z.row(i).transpose() - encode(m, X.row(i).transpose()).mu).norm(), 1e-12);
  }
  const Encoding e = encode(m, X.row(0).transpose());
  EXPECT_TRUE((e.sigma2.array() > 0).all());
  EXPECT_EQ(reparameterize(e.mu, e.sigma2, Vec::Zero(2)), e.mu);
}

TEST(BetaSchedule, StepsAndClamps) {
  const BetaSchedule s;
  EXPECT_DOUBLE_EQ(beta_at(s, 0), 0.0);
  EXPECT_DOUBLE_EQ(beta_at(s, 9), 0.0);
  EXPECT_DOUBLE_EQ(beta_at(s, 10), 0.1);
  EXPECT_NEAR(beta_at(s, 55), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(beta_at(s, 1000), 1.0);
}

TEST(TrainingData, CorrelationAndClipping) {
  Rng rng(9);
  const Mat X = correlated_gaussian(Vec::Zero(6), 2.0, kTrainingCorrelation, 50000, rng);
  const Mat C = X.rowwise() - X.colwise().mean();
  const Mat cov = C.transpose() * C / (X.rows() - 1.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      EXPECT_NEAR(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)), 0.9, 0.05);
    }
    EXPECT_NEAR(std::sqrt(cov(i, i)), 2.0, 0.05);
  }
  const Box dom = Box::cube(10, -5.0, 10.0);
  const Mat P = generate_training_data(10, 2000, dom, 4);
  for (Eigen::Index i = 0; i < P.rows(); ++i) EXPECT_TRUE(dom.contains(P.row(i).transpose()));
  EXPECT_EQ(P, generate_training_data(10, 2000, dom, 4));
}

TEST(Train, ReducesLossAndIsDeterministic) {
  const Mat data = generate_training_data(10, 600, Box::cube(10, -1.0, 1.0), 2);
  const VAEModel m0 = make_vae(vae_architecture("VAE-4.2"), 1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch = 64;
  cfg.lr = 1e-2;
  cfg.seed = 5;
  const TrainResult a = train(m0, data, cfg);
  const TrainResult b = train(m0, data, cfg);
  ASSERT_EQ(a.loss_history.size(), 30u);
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());
  EXPECT_EQ(vae_params(a.model), vae_params(b.model));
}

TEST(Train, ZeroEpochsIsIdentity) {
  const VAEModel m0 = make_vae(4, 2, {}, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(vae_params(retrain(m0, Mat::Ones(3, 4), cfg).model), vae_params(m0));
  EXPECT_THROW(retrain(m0, Mat(0, 4), cfg), std::invalid_argument);
}

TEST(Serialize, RoundTripBitwise) {
  const VAEModel m = make_vae(vae_architecture("VAE-4.3"), 7);
  std::stringstream ss;
  write_vae(ss, m);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), "LSBOVAE1");
  const VAEModel back = read_vae(ss);
  EXPECT_EQ(back.D, 100);
  EXPECT_EQ(back.d, 2);
  EXPECT_EQ(vae_params(back), vae_params(m));
  std::stringstream again;
  write_vae(again, back);
  EXPECT_EQ(again.str(), bytes);
}

}  // namespace
}  // namespace lsbo
