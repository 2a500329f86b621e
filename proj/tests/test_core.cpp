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


#include "lsbo/core.hpp"

#include <gtest/gtest.h>

#include <set>

namespace lsbo {
namespace {

TEST(Box, CubeAndContains) {
  const Box b = Box::cube(3, -1.0, 2.0);
  EXPECT_EQ(b.dim(), 3);
  EXPECT_TRUE(b.contains(Vec::Zero(3)));
  EXPECT_FALSE(b.contains(Vec::Constant(3, 2.5)));
  EXPECT_TRUE(b.contains(Vec::Constant(3, 2.0 + 1e-9), 1e-8));
  EXPECT_DOUBLE_EQ(b.center()[1], 0.5);
  EXPECT_DOUBLE_EQ(b.width()[2], 3.0);
}

TEST(Box, RejectsMismatchedBounds) {
  EXPECT_THROW(Box(Vec::Zero(2), Vec::Ones(3)), std::invalid_argument);
}

TEST(Clip, IdempotentAndInside) {
  Rng rng(4);
  const Box b = Box::cube(5, -2.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Vec x = 10.0 * standard_normal(5, rng);
    const Vec c = clip_to_domain(x, b);
    EXPECT_TRUE(b.contains(c));
    EXPECT_EQ(clip_to_domain(c, b), c);
  }
}

TEST(Clip, DimensionMismatchThrows) {
  EXPECT_THROW(clip_to_domain(Vec::Zero(2), Box::cube(3, 0, 1)), DimensionError);
}

TEST(Seeds, MixSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 5; ++b) {
      for (std::uint64_t c = 0; c < 5; ++c) seen.insert(mix_seed(a, b, c));
    }
  }
  EXPECT_EQ(seen.size(), 500u);
  EXPECT_EQ(mix_seed(7, 1, 2), mix_seed(7, 1, 2));
}

TEST(Normal, KnownValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_pdf(0.0), 0.3989422804014327, 1e-15);
  EXPECT_NEAR(normal_cdf(-1.0) + normal_cdf(1.0), 1.0, 1e-15);
}

TEST(Sampling, UniformStaysInBox) {
  Rng rng(1);
  const Box b(Vec{{0.0, -5.0}}, Vec{{1.0, 5.0}});
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(b.contains(uniform_in(b, rng)));
}

}  // namespace
}  // namespace lsbo
