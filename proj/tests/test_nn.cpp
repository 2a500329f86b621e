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


#include "lsbo/nn.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace lsbo {
namespace {

// Loss L = sum(G .* net(X)); returns the central-difference gradient over params.
Vec numeric_param_grad(MLP net, const Mat& X, const Mat& G, double h) {
  const Vec p0 = net.flat_params();
  Vec g(p0.size());
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Vec p = p0;
    p[i] += h;
    net.set_flat_params(p);
    const double up = (net.predict(X).array() * G.array()).sum();
    p[i] -= 2 * h;
    net.set_flat_params(p);
    const double dn = (net.predict(X).array() * G.array()).sum();
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

void expect_close(const Vec& got, const Vec& want, double rel) {
  ASSERT_EQ(got.size(), want.size());
  for (Eigen::Index i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], rel * std::max(std::abs(want[i]), 1e-3)) << i;
  }
}

TEST(MLP, ParameterGradientsMatchFiniteDifferences) {
  for (Activation act : {Activation::softplus, Activation::identity}) {
    Rng rng(3);
    MLP net({4, 6, 5, 3}, rng, act);
    Mat X(4, 7), G(3, 7);
    for (int j = 0; j < 7; ++j) {
      X.col(j) = standard_normal(4, rng);
      G.col(j) = standard_normal(3, rng);
    }
    const Gradients g = net.backward(net.forward(X), G);
    expect_close(g.flat(), numeric_param_grad(net, X, G, 1e-5), 1e-4);
  }
}

TEST(MLP, InputGradientMatchesFiniteDifferences) {
  Rng rng(4);
  MLP net({3, 8, 2}, rng);
  Mat X(3, 2), G(2, 2);
  X << 0.1, -0.4, 0.7, 1.2, -1.0, 0.3;
  G << 1.0, -0.5, 0.25, 2.0;
  const Gradients g = net.backward(net.forward(X), G);
  const double h = 1e-5;
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      Mat a = X, b = X;
      a(r, c) += h;
      b(r, c) -= h;
      const double fd =
          ((net.predict(a).array() - net.predict(b).array()) * G.array()).sum() / (2 * h);
      EXPECT_NEAR(g.d_input(r, c), fd, 1e-4 * std::max(std::abs(fd), 1e-3));
    }
  }
}

TEST(MLP, StaleTapeThrows) {
  Rng rng(1);
  MLP net({2, 3, 1}, rng);
  const Tape t = net.forward(Mat::Ones(2, 1));
  net.set_flat_params(net.flat_params());
  EXPECT_THROW(net.backward(t, Mat::Ones(1, 1)), std::logic_error);
}

TEST(MLP, ShapesAndCounts) {
  Rng rng(1);
  const MLP net({5, 4, 2}, rng);
  EXPECT_EQ(net.num_params(), 5 * 4 + 4 + 4 * 2 + 2);
  EXPECT_EQ(net.input_dim(), 5);
  EXPECT_EQ(net.output_dim(), 2);
  EXPECT_EQ(net.widths(), (std::vector<int>{5, 4, 2}));
  EXPECT_THROW(net.predict(Mat::Ones(4, 1)), DimensionError);
  EXPECT_THROW(MLP(std::vector<int>{3}, rng), DimensionError);
}

TEST(MLP, GlorotBounds) {
  Rng rng(2);
  const MLP net({30, 20}, rng);
  const double a = std::sqrt(6.0 / 50.0);
  EXPECT_LE(net.layers()[0].W.cwiseAbs().maxCoeff(), a);
  EXPECT_TRUE(net.layers()[0].b.isZero());
}

TEST(MLP, SaveLoadBitwise) {
  Rng rng(5);
  const MLP net({3, 4, 2}, rng);
  std::stringstream ss;
  write_mlp(ss, net);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), "LSBOMLP1");
  const MLP back = read_mlp(ss);
  EXPECT_EQ(back.flat_params(), net.flat_params());
  std::stringstream again;
  write_mlp(again, back);
  EXPECT_EQ(again.str(), bytes);
}

TEST(MLP, ReadRejectsGarbage) {
  std::stringstream ss("not a model at all");
  EXPECT_THROW(read_mlp(ss), std::runtime_error);
}

TEST(Softplus, StableAtExtremes) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_GT(softplus(-800.0), -1e-300);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  AdamState s = AdamState::for_size(3, 0.01);
  const Vec p = Vec{{1.0, 2.0, 3.0}};
  const Vec g = Vec{{0.5, -2.0, 1e-3}};
  const Vec q = adam_step(s, p, g);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(q[i], p[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8), 1e-14);
  }
  EXPECT_EQ(s.t, 1);
}

TEST(Adam, MinimizesQuadratic) {
  AdamState s = AdamState::for_size(2, 0.05);
  Vec p = Vec{{3.0, -2.0}};
  for (int i = 0; i < 2000; ++i) p = adam_step(s, p, 2.0 * (p - Vec{{1.0, 1.0}}));
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], 1.0, 1e-3);
}

}  // namespace
}  // namespace lsbo
