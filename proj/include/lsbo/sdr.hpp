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

// Sequential domain reduction of a box region of interest.
//
// Per coordinate i, with x the new incumbent and r the previous side:
//   d_i     = 2 (x_i - x_prev_i) / r_i            scaled step
//   c_i     = d_i * d_prev_i,  c^_i = sgn(c_i) sqrt|c_i|
//   gamma_i = ((1 + c^_i) gamma_p + (1 - c^_i) gamma_o) / 2
//   lambda_i = eta + |d_i| (gamma_i - eta)
//   r_i    <- lambda_i r_i, recentred at x, then trimmed into the initial box.

#pragma once

#include "lsbo/core.hpp"

namespace lsbo {

struct SDRParams {
  double gamma_o = 0.7;  // shrink applied on oscillation
  double gamma_p = 1.0;  // pan factor
  double eta = 0.9;      // zoom
  double t = 0.5;        // minimum side length
  int xi = 1;            // update period

  /// |d| is unbounded when the incumbent jumps across the region.
  double lambda_min = 0.3;
  double lambda_max = 1.5;

  void validate() const {
    if (!(gamma_o > 0.0 && gamma_o <= 1.0) || !(gamma_p > 0.0) || !(eta > 0.0 && eta < 1.0) ||
        !(t > 0.0) || xi < 1 || !(lambda_min > 0.0 && lambda_min <= lambda_max)) {
      throw std::invalid_argument("SDRParams out of range");
    }
  }
};

struct SDRState {
  Box box;
  Vec r;
  Vec x_prev;
  Vec d_prev;
  Box initial;
  SDRParams params;
  long k = 0;
};

/// Intersects `box` with `initial`. A coordinate whose intersection is empty
/// snaps to the nearest face with width `min_side`; a non-empty intersection
/// narrower than `min_side` is widened inside `initial`.
inline Box sdr_trim(const Box& box, const Box& initial, double min_side) {
  require_dim(box.dim(), initial.dim(), "sdr_trim");
  Box out = box;
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    const double lo0 = initial.lo[i], hi0 = initial.hi[i];
    const double w = std::min(min_side, hi0 - lo0);
    double lo = std::max(box.lo[i], lo0);
    double hi = std::min(box.hi[i], hi0);
    if (lo > hi) {
      if (box.lo[i] >= hi0) {
        lo = hi0 - w;
        hi = hi0;
      } else {
        lo = lo0;
        hi = lo0 + w;
      }
    } else if (hi - lo < w) {
      const double mid = std::clamp(0.5 * (lo + hi), lo0 + 0.5 * w, hi0 - 0.5 * w);
      lo = mid - 0.5 * w;
      hi = mid + 0.5 * w;
    }
    out.lo[i] = lo;
    out.hi[i] = hi;
  }
  return out;
}

inline Box sdr_trim(const Box& box, const Box& initial) { return sdr_trim(box, initial, 0.0); }

/// Centres a box of the initial widths at x0 (clipped into bounds) and trims it.
inline SDRState sdr_init(const Vec& x0, const Box& bounds, const SDRParams& params = {}) {
  params.validate();
  require_dim(x0.size(), bounds.dim(), "sdr_init");
  SDRState s;
  s.params = params;
  s.initial = bounds;
  const Vec x = clip_to_domain(x0, bounds);
  const Vec r0 = bounds.width();
  s.box = sdr_trim(Box(x - 0.5 * r0, x + 0.5 * r0), bounds, params.t);
  s.r = s.box.width();
  s.x_prev = x;
  s.d_prev = Vec::Zero(x.size());
  s.k = 0;
  return s;
}

/// Contraction rate for one coordinate given the current and previous scaled steps.
inline double sdr_contraction(const SDRParams& p, double d, double d_prev) {
  const double c = d * d_prev;
  const double c_hat = (c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0)) * std::sqrt(std::abs(c));
  const double gamma = 0.5 * (p.gamma_p * (1.0 + c_hat) + p.gamma_o * (1.0 - c_hat));
  const double lambda = p.eta + std::abs(d) * (gamma - p.eta);
  return std::clamp(lambda, p.lambda_min, p.lambda_max);
}

/// Period gate: the counter is a multiple of xi and every side is at least t
/// (or the full initial width where that is narrower), up to rounding.
inline bool sdr_should_update(const SDRState& s) {
  if (s.k % s.params.xi != 0) return false;
  for (Eigen::Index i = 0; i < s.r.size(); ++i) {
    const double floor = std::min(s.params.t, s.initial.hi[i] - s.initial.lo[i]);
    if (s.r[i] < floor * (1.0 - 1e-12)) return false;
  }
  return true;
}

/// One pan/zoom step towards incumbent x_k. Sides are floored at t per
/// coordinate (they still pan), and the result is trimmed into the initial box.
inline SDRState sdr_update(const SDRState& s, const Vec& x_k) {
  require_dim(x_k.size(), s.box.dim(), "sdr_update");
  SDRState out = s;
  const Eigen::Index n = x_k.size();
  Vec d(n), r_new(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d[i] = 2.0 * (x_k[i] - s.x_prev[i]) / s.r[i];
    const double lambda = sdr_contraction(s.params, d[i], s.d_prev[i]);
    const double floor = std::min(s.params.t, s.initial.hi[i] - s.initial.lo[i]);
    r_new[i] = std::max(lambda * s.r[i], floor);
  }
  out.box = sdr_trim(Box(x_k - 0.5 * r_new, x_k + 0.5 * r_new), s.initial, s.params.t);
  out.r = out.box.width();
  out.x_prev = x_k;
  out.d_prev = d;
  return out;
}

}  // namespace lsbo
