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

// Performance and data profiles (Dolan-More, More-Wild).
//
// A problem counts as solved by a solver after N evaluations when the
// incumbent satisfies f <= f* + tau (f0 - f*). Performance profiles compare
// N against the fastest solver on the same problem; data profiles compare it
// against the budget alpha (n_p + 1).

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbo {

struct SolverRecord {
  std::string solver;
  std::string problem;  // instance key; one per (problem, seed)
  int n_p = 1;
  std::vector<double> history;  // incumbent after each evaluation
  double f_star = 0.0;
  double f0_star = 0.0;  // best value of the initial design
};

/// Evaluations needed to reach accuracy tau; nullopt when never reached and 0
/// when the starting point is already optimal.
inline std::optional<long> evals_to_accuracy(const SolverRecord& r, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("evals_to_accuracy: 0 < tau < 1");
  if (r.f0_star <= r.f_star) return 0;
  const double threshold = r.f_star + tau * (r.f0_star - r.f_star);
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    if (r.history[i] <= threshold) return static_cast<long>(i + 1);
  }
  return std::nullopt;
}

struct ProfileCurve {
  std::string solver;
  std::vector<double> alpha;
  std::vector<double> fraction;
};

/// Solver ids and problem keys in order of first appearance, plus the
/// evaluation counts indexed [solver][problem] (nullopt: unsolved or missing).
struct ProfileTable {
  std::vector<std::string> solvers;
  std::vector<std::string> problems;
  std::vector<int> n_p;
  std::vector<std::vector<std::optional<long>>> evals;
};

inline ProfileTable tabulate(const std::vector<SolverRecord>& records, double tau) {
  ProfileTable t;
  std::map<std::string, std::size_t> si, pi;
  for (const auto& r : records) {
    if (!si.count(r.solver)) {
      si[r.solver] = t.solvers.size();
      t.solvers.push_back(r.solver);
    }
    if (!pi.count(r.problem)) {
      pi[r.problem] = t.problems.size();
      t.problems.push_back(r.problem);
      t.n_p.push_back(r.n_p);
    }
  }
  t.evals.assign(t.solvers.size(), std::vector<std::optional<long>>(t.problems.size()));
  for (const auto& r : records) {
    t.evals[si[r.solver]][pi[r.problem]] = evals_to_accuracy(r, tau);
  }
  return t;
}

/// Cost ratios r_{p,s}; counts of 0 are treated as 1 so that ratios stay finite.
inline std::vector<std::vector<std::optional<double>>> performance_ratios(const ProfileTable& t) {
  std::vector<std::vector<std::optional<double>>> ratios(
      t.solvers.size(), std::vector<std::optional<double>>(t.problems.size()));
  for (std::size_t p = 0; p < t.problems.size(); ++p) {
    std::optional<long> best;
    for (std::size_t s = 0; s < t.solvers.size(); ++s) {
      const auto& e = t.evals[s][p];
      if (e && (!best || std::max(*e, 1L) < *best)) best = std::max(*e, 1L);
    }
    if (!best) continue;
    for (std::size_t s = 0; s < t.solvers.size(); ++s) {
      const auto& e = t.evals[s][p];
      if (e) ratios[s][p] = static_cast<double>(std::max(*e, 1L)) / static_cast<double>(*best);
    }
  }
  return ratios;
}

/// Grid 2^(k / per_unit) for k = 0..per_unit * max_log2. max_log2 < 0 picks
/// the smallest integer covering every finite ratio.
inline std::vector<ProfileCurve> performance_profile(const std::vector<SolverRecord>& records,
                                                     double tau, int max_log2 = -1,
                                                     int per_unit = 4) {
  if (per_unit < 1) throw std::invalid_argument("performance_profile: per_unit >= 1");
  const ProfileTable t = tabulate(records, tau);
  const auto ratios = performance_ratios(t);
  if (max_log2 < 0) {
    double worst = 1.0;
    for (const auto& row : ratios) {
      for (const auto& r : row) {
        if (r) worst = std::max(worst, *r);
      }
    }
    max_log2 = std::max(1, static_cast<int>(std::ceil(std::log2(worst))));
  }
  std::vector<double> grid;
  for (int k = 0; k <= max_log2 * per_unit; ++k) {
    grid.push_back(std::exp2(static_cast<double>(k) / per_unit));
  }
  const double P = static_cast<double>(t.problems.size());
  std::vector<ProfileCurve> out;
  for (std::size_t s = 0; s < t.solvers.size(); ++s) {
    ProfileCurve c{t.solvers[s], grid, {}};
    for (double a : grid) {
      std::size_t n = 0;
      for (const auto& r : ratios[s]) {
        if (r && *r <= a * (1.0 + 1e-12)) ++n;
      }
      c.fraction.push_back(P > 0 ? static_cast<double>(n) / P : 0.0);
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// alpha = 0, 1, ..., N_g.
inline std::vector<ProfileCurve> data_profile(const std::vector<SolverRecord>& records, double tau,
                                              int N_g) {
  if (N_g <= 0) throw std::invalid_argument("data_profile: N_g > 0");
  const ProfileTable t = tabulate(records, tau);
  const double P = static_cast<double>(t.problems.size());
  std::vector<ProfileCurve> out;
  for (std::size_t s = 0; s < t.solvers.size(); ++s) {
    ProfileCurve c{t.solvers[s], {}, {}};
    for (int a = 0; a <= N_g; ++a) {
      std::size_t n = 0;
      for (std::size_t p = 0; p < t.problems.size(); ++p) {
        const auto& e = t.evals[s][p];
        if (e && std::max(*e, 1L) <= static_cast<long>(a) * (t.n_p[p] + 1)) ++n;
      }
      c.alpha.push_back(a);
      c.fraction.push_back(P > 0 ? static_cast<double>(n) / P : 0.0);
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// Fraction of problems each solver solves at all, in solver order.
inline std::vector<std::pair<std::string, double>> solved_fractions(
    const std::vector<SolverRecord>& records, double tau) {
  const ProfileTable t = tabulate(records, tau);
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t s = 0; s < t.solvers.size(); ++s) {
    std::size_t n = 0;
    for (const auto& e : t.evals[s]) n += e.has_value();
    out.emplace_back(t.solvers[s], t.problems.empty()
                                       ? 0.0
                                       : static_cast<double>(n) /
                                             static_cast<double>(t.problems.size()));
  }
  return out;
}

}  // namespace lsbo
