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

#pragma once

#include "lsbo/gp.hpp"

#include <numeric>
#include <vector>

namespace lsbo {

/// Expected improvement below the incumbent `best` (minimisation):
/// (best - mean) Phi(z) + std phi(z), z = (best - mean) / std; zero when std = 0.
inline double expected_improvement(double mean, double std_dev, double best) {
  if (!(std_dev > 0.0)) return 0.0;
  const double gain = best - mean;
  const double z = gain / std_dev;
  return std::max(0.0, gain * normal_cdf(z) + std_dev * normal_pdf(z));
}

inline double expected_improvement(const GPPosterior& gp, const Vec& x, double best) {
  const Prediction p = gp.predict(x);
  return expected_improvement(p.mean, std::sqrt(p.variance), best);
}

struct AcqConfig {
  int n_raw = 512;
  int n_refine = 8;
  int max_local_steps = 100;
  double tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_raw < 1 || n_refine < 1 || max_local_steps < 1 || n_refine > n_raw || !(tol > 0.0)) {
      throw std::invalid_argument("AcqConfig: counts must be positive with n_refine <= n_raw");
    }
  }
};

struct AcqResult {
  Vec point;
  double value = 0.0;
};

namespace detail {

// Coordinate pattern search with step halving, confined to the region.
inline AcqResult polish(const GPPosterior& gp, const Box& region, double best, AcqResult start,
                        const AcqConfig& cfg) {
  Vec step = 0.25 * region.width();
  Vec x = start.point;
  double fx = start.value;
  for (int sweep = 0; sweep < cfg.max_local_steps; ++sweep) {
    bool improved = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        Vec cand = x;
        cand[i] = std::clamp(x[i] + sign * step[i], region.lo[i], region.hi[i]);
        if (cand[i] == x[i]) continue;
        const double fc = expected_improvement(gp, cand, best);
        if (fc > fx) {
          x = std::move(cand);
          fx = fc;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      step *= 0.5;
      if (step.maxCoeff() < cfg.tol) break;
    }
  }
  return {x, fx};
}

}  // namespace detail

/// Maximises EI over `region`: uniform raw samples, ranked, then coordinate
/// pattern-search polish of the top n_refine. Deterministic given cfg.seed;
/// ties resolve to the lowest sample index.
inline AcqResult maximize_acquisition(const GPPosterior& gp, const Box& region,
                                      const AcqConfig& cfg) {
  cfg.validate();
  require_dim(region.dim(), gp.inputs().cols(), "maximize_acquisition");
  const double best = gp.best_target();
  if ((region.width().array() < 1e-12).any()) {
    const Vec c = region.center();
    return {c, expected_improvement(gp, c, best)};
  }

  Rng rng(cfg.seed);
  Mat raw(cfg.n_raw, region.dim());
  for (int s = 0; s < cfg.n_raw; ++s) raw.row(s) = uniform_in(region, rng).transpose();
  const auto preds = gp.predict_many(raw);
  std::vector<double> ei(preds.size());
  for (std::size_t s = 0; s < preds.size(); ++s) {
    ei[s] = expected_improvement(preds[s].mean, std::sqrt(preds[s].variance), best);
  }

  std::vector<std::size_t> order(ei.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });

  AcqResult result{raw.row(static_cast<Eigen::Index>(order[0])).transpose(), ei[order[0]]};
  for (int r = 0; r < cfg.n_refine; ++r) {
    const auto idx = order[static_cast<std::size_t>(r)];
    AcqResult start{raw.row(static_cast<Eigen::Index>(idx)).transpose(), ei[idx]};
    AcqResult polished = detail::polish(gp, region, best, std::move(start), cfg);
    if (polished.value > result.value) result = std::move(polished);
  }
  result.point = clip_to_domain(result.point, region);
  return result;
}

}  // namespace lsbo
