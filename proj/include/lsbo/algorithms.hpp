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

// The optimisers. All of them share one GP + EI loop that searches a box in
// some search space (ambient, VAE latent or random embedding) and maps each
// query to the ambient domain before evaluating the objective.
//
//   bo_sdr          ambient search, optional SDR
//   bo_vae          latent search on a fixed pre-trained VAE, optional SDR
//   bo_vae_retrain  retrain every q evaluations, re-encode, SDR restarted per cycle
//   bo_vae_dml      as above with the metric-augmented loss and no SDR
//   rembo           y in [-delta, delta]^(d_e + 1), x = clip(A y)

#pragma once

#include "lsbo/acquisition.hpp"
#include "lsbo/dml.hpp"
#include "lsbo/sdr.hpp"
#include "lsbo/testbed.hpp"

#include <chrono>
#include <optional>

namespace lsbo {

enum class Algorithm { bo_sdr, v_bovae, r_bovae, s_bovae, rembo };

inline std::string algorithm_id(Algorithm a) {
  switch (a) {
    case Algorithm::bo_sdr: return "bo_sdr";
    case Algorithm::v_bovae: return "v_bovae";
    case Algorithm::r_bovae: return "r_bovae";
    case Algorithm::s_bovae: return "s_bovae";
    case Algorithm::rembo: return "rembo";
  }
  return "unknown";
}

inline std::string algorithm_label(Algorithm a) {
  switch (a) {
    case Algorithm::bo_sdr: return "BO-SDR";
    case Algorithm::v_bovae: return "V-BOVAE";
    case Algorithm::r_bovae: return "R-BOVAE";
    case Algorithm::s_bovae: return "S-BOVAE";
    case Algorithm::rembo: return "REMBO";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(const std::string& id) {
  for (auto a : {Algorithm::bo_sdr, Algorithm::v_bovae, Algorithm::r_bovae, Algorithm::s_bovae,
                 Algorithm::rembo}) {
    if (algorithm_id(a) == id) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + id + "'");
}

inline bool uses_vae(Algorithm a) {
  return a == Algorithm::v_bovae || a == Algorithm::r_bovae || a == Algorithm::s_bovae;
}

struct RunConfig {
  Algorithm algorithm = Algorithm::bo_sdr;
  int B = 350;
  int q = 50;  // q >= B means a single retraining cycle
  int N = 0;  // 0 selects the per-algorithm default
  std::optional<Box> latent_bound;  // defaults to [-5, 5]^d
  bool use_sdr = true;
  SDRParams sdr;
  DMLConfig dml;
  int retrain_epochs = 2;
  int retrain_batch = 0;  // 0: 128 for D <= 10, else 256
  double retrain_lr = 1e-3;
  bool stochastic_decode = false;
  int rembo_effective_dim = 0;

  int gp_restarts = 3;       // restarts on the first fit of a cycle
  int gp_warm_restarts = 1;  // later fits: warm start plus (n - 1) random
  int gp_max_iters = 60;
  AcqConfig acq;             // seed is replaced per iteration

  std::uint64_t seed = 0;
  int repetitions = 1;

  void validate() const {
    if (B < 0) throw std::invalid_argument("RunConfig: B must be >= 0");
    if (q < 1) throw std::invalid_argument("RunConfig: q must be >= 1");
    if (repetitions < 1) throw std::invalid_argument("RunConfig: repetitions >= 1");
    if (N < 0 || N == 1) throw std::invalid_argument("RunConfig: N must be 0 (default) or >= 2");
    if (gp_restarts < 1 || gp_warm_restarts < 1 || gp_max_iters < 1) {
      throw std::invalid_argument("RunConfig: GP restarts and iterations must be positive");
    }
    if (retrain_epochs < 0 || retrain_batch < 0 || !(retrain_lr >= 0.0)) {
      throw std::invalid_argument("RunConfig: bad retraining settings");
    }
    sdr.validate();
    dml.validate();
    acq.validate();
  }
};

struct TraceRow {
  long iteration = 0;  // 0 for the initial design, then 1..B
  long eval_count = 0;
  Vec x;  // evaluated ambient point
  Vec u;  // search-space point (latent / embedding / ambient)
  double f = 0.0;
  double f_best = 0.0;
  double gap = 0.0;
  Box region;  // search region used for this query
  double seconds = 0.0;
};

struct RunTrace {
  std::string algorithm;
  std::string problem;
  double f_star = 0.0;
  Eigen::Index ambient_dim = 0;
  Eigen::Index search_dim = 0;
  std::uint64_t seed = 0;
  long n_initial = 0;
  std::vector<TraceRow> rows;

  double final_best() const { return rows.empty() ? 0.0 : rows.back().f_best; }

  /// Best value over the initial design.
  double initial_best() const {
    double b = std::numeric_limits<double>::infinity();
    for (long i = 0; i < n_initial && i < static_cast<long>(rows.size()); ++i) {
      b = std::min(b, rows[static_cast<std::size_t>(i)].f);
    }
    return b;
  }

  /// Incumbent after each optimisation-loop evaluation.
  std::vector<double> loop_history() const {
    std::vector<double> h;
    for (const auto& r : rows) {
      if (r.iteration > 0) h.push_back(r.f_best);
    }
    return h;
  }
};

inline int default_initial_count(int pool_size) {
  return std::max(2, static_cast<int>(std::ceil(0.01 * static_cast<double>(pool_size))));
}

/// Sub-seed for retraining cycle `cycle` of a run.
inline std::uint64_t retrain_seed(std::uint64_t run_seed, long cycle) {
  return mix_seed(run_seed, static_cast<std::uint64_t>(cycle), 20);
}

inline TrainConfig run_retrain_config(const RunConfig& cfg, int D, long cycle) {
  TrainConfig t = retrain_config(D, retrain_seed(cfg.seed, cycle));
  t.epochs = cfg.retrain_epochs;
  if (cfg.retrain_batch > 0) t.batch = cfg.retrain_batch;
  t.lr = cfg.retrain_lr;
  return t;
}

struct LabelledSet {
  Mat X;  // n x D
  Vec F;
};

/// N uniform points in the objective's domain.
inline LabelledSet initial_design(const ObjectiveSpec& obj, int N, std::uint64_t seed) {
  if (N < 2) throw std::invalid_argument("initial_design: N >= 2");
  Rng rng(mix_seed(seed, 0, 10));
  LabelledSet out{Mat(N, obj.dim()), Vec(N)};
  for (int i = 0; i < N; ++i) {
    const Vec x = uniform_in(obj.domain, rng);
    out.X.row(i) = x.transpose();
    out.F[i] = evaluate(obj, x);
  }
  return out;
}

/// N rows drawn without replacement from a pool, clipped and evaluated.
inline LabelledSet initial_design_from_pool(const ObjectiveSpec& obj, const Mat& pool, int N,
                                            std::uint64_t seed) {
  require_dim(pool.cols(), obj.dim(), "initial_design_from_pool");
  if (pool.rows() < 2) throw std::invalid_argument("initial_design_from_pool: pool too small");
  const int n = std::min<int>(std::max(N, 2), static_cast<int>(pool.rows()));
  Rng rng(mix_seed(seed, 0, 11));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), idx.size() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[pick(rng)]);
  }
  LabelledSet out{Mat(n, obj.dim()), Vec(n)};
  for (int i = 0; i < n; ++i) {
    const Vec x = clip_to_domain(pool.row(idx[static_cast<std::size_t>(i)]).transpose(), obj.domain);
    out.X.row(i) = x.transpose();
    out.F[i] = evaluate(obj, x);
  }
  return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline void append_row(Mat& M, const Vec& v) {
  M.conservativeResize(M.rows() + 1, v.size());
  M.row(M.rows() - 1) = v.transpose();
}

inline void append_value(Vec& F, double f) {
  F.conservativeResize(F.size() + 1);
  F[F.size() - 1] = f;
}

inline Eigen::Index argmin_first(const Vec& F) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < F.size(); ++i) {
    if (F[i] < F[best]) best = i;
  }
  return best;
}

struct Loop {
  const ObjectiveSpec& obj;
  const RunConfig& cfg;
  RunTrace& trace;
  long global_iter = 0;
  double best = std::numeric_limits<double>::infinity();

  void record(long iteration, const Vec& x, const Vec& u, double f, const Box& region,
              double seconds) {
    best = std::min(best, f);
    TraceRow row;
    row.iteration = iteration;
    row.eval_count = static_cast<long>(trace.rows.size()) + 1;
    row.x = x;
    row.u = u;
    row.f = f;
    row.f_best = best;
    row.gap = best - obj.f_star;
    row.region = region;
    row.seconds = seconds;
    trace.rows.push_back(std::move(row));
  }

  /// `iters` GP + EI iterations over S (search points) and F, starting a fresh
  /// SDR state on R0 when use_sdr is set. X collects ambient points.
  template <class ToAmbient>
  void run(Mat& S, Vec& F, Mat& X, const Box& R0, bool use_sdr, int iters, ToAmbient&& to_ambient) {
    std::optional<SDRState> sdr;
    if (use_sdr) sdr = sdr_init(R0.center(), R0, cfg.sdr);
    std::optional<KernelParams> warm;
    for (int k = 1; k <= iters; ++k) {
      const auto t0 = Clock::now();
      const long g = ++global_iter;
      GPConfig gc;
      gc.restarts = warm ? cfg.gp_warm_restarts : cfg.gp_restarts;
      gc.max_iters = cfg.gp_max_iters;
      gc.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(g), 1);
      gc.initial = warm;
      const GPPosterior gp = fit(S, F, gc);
      warm = gp.params();

      const Box region = sdr ? sdr->box : R0;
      AcqConfig ac = cfg.acq;
      ac.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(g), 2);
      const Vec u = maximize_acquisition(gp, region, ac).point;
      const Vec x = clip_to_domain(to_ambient(u, g), obj.domain);
      const double f = evaluate(obj, x);
      append_row(S, u);
      append_value(F, f);
      append_row(X, x);

      if (sdr) {
        sdr->k = k;
        if (sdr_should_update(*sdr)) {
          const long keep = sdr->k;
          *sdr = sdr_update(*sdr, S.row(argmin_first(F)).transpose());
          sdr->k = keep;
        }
      }
      const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
      record(g, x, u, f, region, secs);
    }
  }
};

inline RunTrace new_trace(const ObjectiveSpec& obj, const RunConfig& cfg, Eigen::Index search_dim) {
  RunTrace t;
  t.algorithm = algorithm_id(cfg.algorithm);
  t.problem = obj.name;
  t.f_star = obj.f_star;
  t.ambient_dim = obj.dim();
  t.search_dim = search_dim;
  t.seed = cfg.seed;
  return t;
}

inline Box latent_box(const RunConfig& cfg, int d) {
  if (cfg.latent_bound) {
    require_dim(cfg.latent_bound->dim(), d, "latent_bound");
    return *cfg.latent_bound;
  }
  return Box::cube(d, -5.0, 5.0);
}

enum class Retrain { none, elbo, dml };

inline RunTrace latent_run(const ObjectiveSpec& obj, const VAEModel& pretrained, const Mat& pool,
                           const RunConfig& cfg, Retrain mode, bool use_sdr) {
  cfg.validate();
  require_dim(pretrained.D, obj.dim(), "VAE ambient dimension");
  RunTrace trace = new_trace(obj, cfg, pretrained.d);
  Loop loop{obj, cfg, trace};
  const Box R0 = latent_box(cfg, pretrained.d);

  const int N = cfg.N > 0 ? cfg.N : default_initial_count(static_cast<int>(pool.rows()));
  LabelledSet L = initial_design_from_pool(obj, pool, N, cfg.seed);
  VAEModel model = pretrained;
  const long cycles = (mode == Retrain::none || cfg.B == 0) ? 0 : (cfg.B + cfg.q - 1) / cfg.q;
  auto retrain_cycle = [&](long l) {
    const TrainConfig tc = run_retrain_config(cfg, model.D, l);
    if (mode == Retrain::dml) {
      const std::vector<double> f(L.F.data(), L.F.data() + L.F.size());
      model = dml_retrain(model, L.X, f, tc, cfg.dml).model;
    } else {
      model = retrain(model, L.X, tc).model;
    }
  };
  // The first retraining precedes any query, so the initial rows carry the
  // codes the first cycle actually searches from.
  if (cycles > 0) retrain_cycle(0);
  Mat S = encode_means(model, L.X);
  trace.n_initial = L.X.rows();
  for (Eigen::Index i = 0; i < L.X.rows(); ++i) {
    loop.record(0, L.X.row(i).transpose(), S.row(i).transpose(), L.F[i], R0, 0.0);
  }

  auto to_ambient = [&](const Vec& z, long g) -> Vec {
    if (!cfg.stochastic_decode) return decode(model, z);
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(g), 3));
    return decode_sample(model, z, rng);
  };

  if (mode == Retrain::none) {
    loop.run(S, L.F, L.X, R0, use_sdr, cfg.B, to_ambient);
    return trace;
  }
  for (long l = 0; l < cycles; ++l) {
    if (l > 0) {
      retrain_cycle(l);
      S = encode_means(model, L.X);
    }
    const int iters = static_cast<int>(std::min<long>(cfg.q, cfg.B - l * cfg.q));
    loop.run(S, L.F, L.X, R0, use_sdr, iters, to_ambient);
  }
  return trace;
}

}  // namespace detail

inline RunTrace bo_sdr(const ObjectiveSpec& obj, const RunConfig& cfg) {
  cfg.validate();
  RunTrace trace = detail::new_trace(obj, cfg, obj.dim());
  detail::Loop loop{obj, cfg, trace};
  const int N = cfg.N > 0 ? cfg.N : static_cast<int>(2 * obj.dim());
  LabelledSet L = initial_design(obj, N, cfg.seed);
  trace.n_initial = N;
  for (int i = 0; i < N; ++i) {
    loop.record(0, L.X.row(i).transpose(), L.X.row(i).transpose(), L.F[i], obj.domain, 0.0);
  }
  Mat S = L.X;
  loop.run(S, L.F, L.X, obj.domain, cfg.use_sdr, cfg.B, [](const Vec& u, long) { return u; });
  return trace;
}

/// Searches `bounds` (which must lie inside the objective's domain).
inline RunTrace bo_sdr(const ObjectiveSpec& obj, const Box& bounds, const RunConfig& cfg) {
  if (!obj.domain.contains(bounds)) throw DimensionError("bo_sdr: bounds outside the domain");
  ObjectiveSpec restricted = obj;
  restricted.domain = bounds;
  return bo_sdr(restricted, cfg);
}

inline RunTrace bo_vae(const ObjectiveSpec& obj, const VAEModel& model, const Mat& pool,
                       const RunConfig& cfg) {
  return detail::latent_run(obj, model, pool, cfg, detail::Retrain::none, cfg.use_sdr);
}

inline RunTrace bo_vae_retrain(const ObjectiveSpec& obj, const VAEModel& model, const Mat& pool,
                               const RunConfig& cfg) {
  return detail::latent_run(obj, model, pool, cfg, detail::Retrain::elbo, cfg.use_sdr);
}

inline RunTrace bo_vae_dml(const ObjectiveSpec& obj, const VAEModel& model, const Mat& pool,
                           const RunConfig& cfg) {
  return detail::latent_run(obj, model, pool, cfg, detail::Retrain::dml, false);
}

struct RandomEmbedding {
  Mat A;  // D x d
  double delta = 0.0;
  Box Y;

  Vec to_ambient(const Vec& y, const Box& domain) const { return clip_to_domain(A * y, domain); }
};

inline RandomEmbedding make_embedding(Eigen::Index D, int effective_dim, std::uint64_t seed) {
  if (effective_dim < 1) throw std::invalid_argument("rembo: effective dimension >= 1");
  const int d = effective_dim + 1;
  Rng rng(mix_seed(seed, 0, 30));
  std::normal_distribution<double> g(0.0, 1.0);
  RandomEmbedding e;
  e.A.resize(D, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < D; ++i) e.A(i, j) = g(rng);
  }
  e.delta = 2.2 * std::sqrt(static_cast<double>(effective_dim));
  e.Y = Box::cube(d, -e.delta, e.delta);
  return e;
}

inline RunTrace rembo(const ObjectiveSpec& obj, int effective_dim, const RunConfig& cfg) {
  cfg.validate();
  const RandomEmbedding emb = make_embedding(obj.dim(), effective_dim, cfg.seed);
  const Eigen::Index d = emb.A.cols();
  RunTrace trace = detail::new_trace(obj, cfg, d);
  detail::Loop loop{obj, cfg, trace};
  const int N = cfg.N > 0 ? cfg.N : static_cast<int>(2 * d);
  Rng rng(mix_seed(cfg.seed, 0, 10));
  Mat S(N, d), X(N, obj.dim());
  Vec F(N);
  for (int i = 0; i < N; ++i) {
    const Vec y = uniform_in(emb.Y, rng);
    const Vec x = emb.to_ambient(y, obj.domain);
    S.row(i) = y.transpose();
    X.row(i) = x.transpose();
    F[i] = evaluate(obj, x);
    loop.record(0, x, y, F[i], emb.Y, 0.0);
  }
  trace.n_initial = N;
  loop.run(S, F, X, emb.Y, false, cfg.B,
           [&](const Vec& y, long) { return emb.to_ambient(y, obj.domain); });
  return trace;
}

inline RunTrace rembo(const ObjectiveSpec& obj, const RunConfig& cfg) {
  return rembo(obj, cfg.rembo_effective_dim, cfg);
}

/// Dispatches on cfg.algorithm. VAE algorithms need a model and its pool.
inline RunTrace run_algorithm(const ObjectiveSpec& obj, const RunConfig& cfg,
                              const VAEModel* model = nullptr, const Mat* pool = nullptr) {
  if (uses_vae(cfg.algorithm) && (model == nullptr || pool == nullptr)) {
    throw std::invalid_argument(algorithm_id(cfg.algorithm) + " needs a VAE and its data pool");
  }
  switch (cfg.algorithm) {
    case Algorithm::bo_sdr: return bo_sdr(obj, cfg);
    case Algorithm::v_bovae: return bo_vae(obj, *model, *pool, cfg);
    case Algorithm::r_bovae: return bo_vae_retrain(obj, *model, *pool, cfg);
    case Algorithm::s_bovae: return bo_vae_dml(obj, *model, *pool, cfg);
    case Algorithm::rembo: return rembo(obj, cfg);
  }
  throw std::logic_error("unreachable");
}

}  // namespace lsbo
