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

// Benchmark objectives: the global-optimisation catalog, additive-noise
// wrappers, affine domain rescaling and rotated low-rank embeddings.

#pragma once

#include "lsbo/core.hpp"

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lsbo {

/// A box-constrained benchmark function with a known global minimum.
struct ObjectiveSpec {
  std::string name;
  Box domain;
  double f_star = 0.0;
  std::optional<Vec> x_star;
  /// Raw formula; evaluated without clipping. Use evaluate() for the checked entry point.
  std::function<double(const Vec&)> fn;

  Eigen::Index dim() const { return domain.dim(); }
};

/// Evaluates the objective after clipping x into its domain.
inline double evaluate(const ObjectiveSpec& spec, const Vec& x) {
  require_dim(x.size(), spec.dim(), "evaluate");
  return spec.fn(clip_to_domain(x, spec.domain));
}

namespace functions {

inline double ackley(const Vec& x) {
  constexpr double a = 20.0, b = 0.2, c = 2.0 * std::numbers::pi;
  const double n = static_cast<double>(x.size());
  double sq = 0.0, cs = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    cs += std::cos(c * x[i]);
  }
  return -a * std::exp(-b * std::sqrt(sq / n)) - std::exp(cs / n) + a + std::numbers::e;
}

inline double rosenbrock(const Vec& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double t = x[i + 1] - x[i] * x[i];
    s += 100.0 * t * t + (x[i] - 1.0) * (x[i] - 1.0);
  }
  return s;
}

inline double styblinski_tang(const Vec& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x[i] * x[i];
    s += v * v - 16.0 * v + 5.0 * x[i];
  }
  return 0.5 * s;
}

inline double rastrigin(const Vec& x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s += x[i] * x[i] - 10.0 * std::cos(2.0 * std::numbers::pi * x[i]);
  }
  return s;
}

// w_i = 1 + (x_i - 1)/4
inline double levy(const Vec& x) {
  const Eigen::Index n = x.size();
  auto w = [&](Eigen::Index i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  const double pi = std::numbers::pi;
  double s = std::pow(std::sin(pi * w(0)), 2);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double wi = w(i);
    s += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * std::pow(std::sin(pi * wi + 1.0), 2));
  }
  const double wn = w(n - 1);
  s += (wn - 1.0) * (wn - 1.0) * (1.0 + std::pow(std::sin(2.0 * pi * wn), 2));
  return s;
}

inline double beale(const Vec& x) {
  const double u = x[0], v = x[1];
  const double t1 = 1.5 - u + u * v;
  const double t2 = 2.25 - u + u * v * v;
  const double t3 = 2.625 - u + u * v * v * v;
  return t1 * t1 + t2 * t2 + t3 * t3;
}

// f = -sum_i alpha_i exp(-sum_j A_ij (x_j - P_ij)^2)
inline double hartmann3(const Vec& x) {
  static constexpr std::array<double, 4> alpha{1.0, 1.2, 3.0, 3.2};
  static constexpr double A[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
  static constexpr double P[4][3] = {{0.3689, 0.1170, 0.2673},
                                     {0.4699, 0.4387, 0.7470},
                                     {0.1091, 0.8732, 0.5547},
                                     {0.0381, 0.5743, 0.8828}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 3; ++j) inner += A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]);
    s -= alpha[i] * std::exp(-inner);
  }
  return s;
}

inline double hartmann6(const Vec& x) {
  static constexpr std::array<double, 4> alpha{1.0, 1.2, 3.0, 3.2};
  static constexpr double A[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                                     {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                                     {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                                     {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
  static constexpr double P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                     {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                     {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                     {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 6; ++j) inner += A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]);
    s -= alpha[i] * std::exp(-inner);
  }
  return s;
}

// f = -sum_{i<m} 1 / (sum_j (x_j - C_ji)^2 + beta_i), beta = (1,2,2,4,4,6,3,7,5,5)/10
inline double shekel(const Vec& x, int m) {
  static constexpr std::array<double, 10> beta{0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
  static constexpr double C[4][10] = {{4.0, 1.0, 8.0, 6.0, 3.0, 2.0, 5.0, 8.0, 6.0, 7.0},
                                      {4.0, 1.0, 8.0, 6.0, 7.0, 9.0, 3.0, 1.0, 2.0, 3.6},
                                      {4.0, 1.0, 8.0, 6.0, 3.0, 2.0, 5.0, 8.0, 6.0, 7.0},
                                      {4.0, 1.0, 8.0, 6.0, 7.0, 9.0, 3.0, 1.0, 2.0, 3.6}};
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    double inner = beta[static_cast<std::size_t>(i)];
    for (int j = 0; j < 4; ++j) inner += (x[j] - C[j][i]) * (x[j] - C[j][i]);
    s -= 1.0 / inner;
  }
  return s;
}

}  // namespace functions

/// Names accepted by make_objective().
inline std::vector<std::string> catalog_names() {
  return {"ackley", "rosenbrock", "styblinski_tang", "rastrigin", "levy",
          "beale",  "hartmann3",  "hartmann6",       "shekel5",   "shekel7"};
}

/// Builds a catalog function at its native domain. Fixed-dimension functions
/// accept dim == 0 or their own dimension.
inline ObjectiveSpec make_objective(const std::string& name, Eigen::Index dim = 0) {
  auto fixed = [&](Eigen::Index n) {
    if (dim != 0 && dim != n) {
      throw DimensionError(name + " is defined only for dimension " + std::to_string(n));
    }
    return n;
  };
  auto variable = [&]() {
    if (dim < 1) throw DimensionError(name + " requires a positive dimension");
    return dim;
  };
  ObjectiveSpec s;
  s.name = name;
  if (name == "ackley") {
    const auto n = variable();
    s.domain = Box::cube(n, -30.0, 30.0);
    s.x_star = Vec::Zero(n);
    s.fn = functions::ackley;
  } else if (name == "rosenbrock") {
    const auto n = variable();
    if (n < 2) throw DimensionError("rosenbrock requires dimension >= 2");
    s.domain = Box::cube(n, -5.0, 10.0);
    s.x_star = Vec::Ones(n);
    s.fn = functions::rosenbrock;
  } else if (name == "styblinski_tang") {
    const auto n = variable();
    // Root of 4x^3 - 32x + 5 = 0 in [-3, -2.5].
    constexpr double root = -2.903534027771177;
    s.domain = Box::cube(n, -5.0, 5.0);
    s.x_star = Vec::Constant(n, root);
    s.f_star = -39.16616570377141 * static_cast<double>(n);
    s.fn = functions::styblinski_tang;
  } else if (name == "rastrigin") {
    const auto n = variable();
    s.domain = Box::cube(n, -5.12, 5.12);
    s.x_star = Vec::Zero(n);
    s.fn = functions::rastrigin;
  } else if (name == "levy") {
    const auto n = variable();
    s.domain = Box::cube(n, -10.0, 10.0);
    s.x_star = Vec::Ones(n);
    s.fn = functions::levy;
  } else if (name == "beale") {
    fixed(2);
    s.domain = Box::cube(2, -4.5, 4.5);
    s.x_star = Vec{{3.0, 0.5}};
    s.fn = functions::beale;
  } else if (name == "hartmann3") {
    fixed(3);
    s.domain = Box::cube(3, 0.0, 1.0);
    s.x_star = Vec{{0.11458888122541287, 0.5556488954739371, 0.8525469842172746}};
    s.f_star = -3.862779787332663;
    s.fn = functions::hartmann3;
  } else if (name == "hartmann6") {
    fixed(6);
    s.domain = Box::cube(6, 0.0, 1.0);
    s.x_star = Vec{{0.20168950909365746, 0.15001069354111374, 0.4768739729250998,
                    0.2753324275220782, 0.3116516172395686, 0.6573005345536702}};
    s.f_star = -3.3223680114155147;
    s.fn = functions::hartmann6;
  } else if (name == "shekel5") {
    fixed(4);
    s.domain = Box::cube(4, 0.0, 10.0);
    s.x_star = Vec{{4.000037152376549, 4.000133278657566, 4.000037151057555, 4.000133277090425}};
    s.f_star = -10.153199679058229;
    s.fn = [](const Vec& x) { return functions::shekel(x, 5); };
  } else if (name == "shekel7") {
    fixed(4);
    s.domain = Box::cube(4, 0.0, 10.0);
    s.x_star = Vec{{4.000572818167059, 3.9996062070672305, 4.000572821117356, 3.999606210400273}};
    s.f_star = -10.402915336777745;
    s.fn = [](const Vec& x) { return functions::shekel(x, 7); };
  } else {
    throw std::invalid_argument("unknown objective '" + name + "'");
  }
  return s;
}

/// Affine change of variables onto `target`; the minimum value is unchanged.
inline ObjectiveSpec scale_domain(const ObjectiveSpec& spec, const Box& target) {
  require_dim(target.dim(), spec.dim(), "scale_domain");
  for (Eigen::Index i = 0; i < target.dim(); ++i) {
    if (!(target.hi[i] - target.lo[i] > 0.0)) {
      throw DimensionError("scale_domain: degenerate target box");
    }
  }
  const Vec src_lo = spec.domain.lo;
  const Vec ratio = spec.domain.width().cwiseQuotient(target.width());
  const Vec dst_lo = target.lo;
  ObjectiveSpec out = spec;
  out.domain = target;
  out.fn = [fn = spec.fn, src_lo, ratio, dst_lo](const Vec& x) {
    return fn(src_lo + ratio.cwiseProduct(x - dst_lo));
  };
  if (spec.x_star) {
    out.x_star = dst_lo + (*spec.x_star - src_lo).cwiseQuotient(ratio);
  }
  return out;
}

inline ObjectiveSpec scale_domain(const ObjectiveSpec& spec, double lower, double upper) {
  return scale_domain(spec, Box::cube(spec.dim(), lower, upper));
}

/// f~(x) = f(x) + sigma * eps with eps ~ N(0, 1) i.i.d.
struct NoisyObjective {
  ObjectiveSpec base;
  double sigma = 0.0;
  std::uint64_t rng_seed = 0;

  Rng stream() const { return Rng(rng_seed); }
};

inline double evaluate_noisy(const NoisyObjective& nobj, const Vec& x, Rng& stream) {
  const double clean = evaluate(nobj.base, x);
  if (nobj.sigma == 0.0) return clean;
  std::normal_distribution<double> g(0.0, 1.0);
  return clean + nobj.sigma * g(stream);
}

/// Wraps a noisy objective as a plain ObjectiveSpec whose evaluator owns the
/// noise stream. The returned evaluator is stateful and must not be shared
/// across concurrently running optimisers.
inline ObjectiveSpec as_objective(const NoisyObjective& nobj) {
  if (nobj.sigma == 0.0) return nobj.base;
  struct State {
    std::mutex mu;
    Rng rng;
  };
  auto state = std::make_shared<State>();
  state->rng = nobj.stream();
  ObjectiveSpec out = nobj.base;
  out.fn = [fn = nobj.base.fn, sigma = nobj.sigma, state](const Vec& x) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::lock_guard lock(state->mu);
    return fn(x) + sigma * g(state->rng);
  };
  return out;
}

/// Haar-distributed orthogonal matrix: QR of a seeded Gaussian matrix with the
/// signs of R's diagonal folded into Q.
inline Mat random_orthogonal(Eigen::Index dim, std::uint64_t seed) {
  if (dim < 1) throw DimensionError("random_orthogonal: dimension must be positive");
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat G(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) G(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ() * Mat::Identity(dim, dim);
  const Mat& R = qr.matrixQR();
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

/// f(x) = h(Qx) where h ignores every coordinate past d_e; the last D - d_e
/// rows of Q span the subspace along which f is constant.
struct LowRankProblem {
  ObjectiveSpec base;
  Eigen::Index ambient_dim = 0;
  Mat Q;

  Eigen::Index effective_dim() const { return base.dim(); }

  double operator()(const Vec& x) const {
    require_dim(x.size(), ambient_dim, "LowRankProblem");
    return base.fn(Q.topRows(effective_dim()) * x);
  }

  /// The problem as a box objective on [-1, 1]^D.
  ObjectiveSpec objective() const {
    ObjectiveSpec out;
    out.name = "lowrank_" + base.name;
    out.domain = Box::cube(ambient_dim, -1.0, 1.0);
    out.f_star = base.f_star;
    out.fn = [self = *this](const Vec& x) { return self(x); };
    if (base.x_star) {
      Vec padded = Vec::Zero(ambient_dim);
      padded.head(effective_dim()) = *base.x_star;
      Vec xs = Q.transpose() * padded;
      if (out.domain.contains(xs)) out.x_star = std::move(xs);
    }
    return out;
  }
};

inline LowRankProblem make_low_rank_with(const ObjectiveSpec& base, const Mat& Q) {
  const Eigen::Index de = base.dim();
  if (Q.rows() != Q.cols()) throw DimensionError("make_low_rank: rotation must be square");
  if (Q.rows() < de) {
    throw DimensionError("make_low_rank: ambient dimension " + std::to_string(Q.rows()) +
                         " is below the effective dimension " + std::to_string(de));
  }
  if (!(base.domain == Box::cube(de, -1.0, 1.0))) {
    throw DimensionError("make_low_rank: base domain must be scaled to [-1, 1]^d_e");
  }
  return LowRankProblem{base, Q.rows(), Q};
}

inline LowRankProblem make_low_rank(const ObjectiveSpec& base, Eigen::Index ambient_dim,
                                    std::uint64_t seed) {
  if (ambient_dim < base.dim()) {
    throw DimensionError("make_low_rank: D < d_e");
  }
  return make_low_rank_with(base, random_orthogonal(ambient_dim, seed));
}

/// Identity rotation; f depends on the first d_e coordinates only.
inline LowRankProblem make_low_rank_identity(const ObjectiveSpec& base, Eigen::Index ambient_dim) {
  if (ambient_dim < base.dim()) throw DimensionError("make_low_rank: D < d_e");
  return make_low_rank_with(base, Mat::Identity(ambient_dim, ambient_dim));
}

}  // namespace lsbo
