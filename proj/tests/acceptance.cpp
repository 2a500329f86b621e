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

// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures. Pass criterion numbers (1-6) to run a subset.
//
// VAE checkpoints are cached in LSBO_CACHE_DIR, or acceptance_cache/ next to
// the working directory.

#include "lsbo/harness/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>

using namespace lsbo;
using namespace lsbo::harness;

namespace {

int failures = 0;

void report(const std::string& id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name;
  if (!detail.empty()) std::cout << ": " << detail;
  std::cout << std::endl;
  if (!pass) ++failures;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s + "]";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path cache_dir() {
  if (const char* env = std::getenv("LSBO_CACHE_DIR"); env && *env) return env;
  return fs::current_path() / "acceptance_cache";
}

TrainedVAE pretrained(const std::string& arch, const ObjectiveSpec& obj, int pool) {
  VAESpec spec;
  spec.architecture = arch;
  spec.pool = pool;
  fs::create_directories(cache_dir());
  return obtain_vae(spec, obj, cache_dir(), true, std::cerr);
}

// Paper-default search settings for the 10-D problems.
RunConfig config10(Algorithm a, std::uint64_t seed) {
  RunConfig c;
  c.algorithm = a;
  c.B = 150;
  c.seed = seed;
  return c;
}

// 100-D problems: shorter hyperparameter ascent and acquisition polish.
RunConfig config100(Algorithm a, std::uint64_t seed) {
  RunConfig c = config10(a, seed);
  c.gp_restarts = 2;
  c.gp_max_iters = 20;
  c.acq.n_refine = 2;
  c.acq.max_local_steps = 10;
  return c;
}

SolverRecord record_of(const RunTrace& t, const std::string& solver, const std::string& problem) {
  return {solver, problem + "#" + std::to_string(t.seed), static_cast<int>(t.ambient_dim),
          t.loop_history(), t.f_star, t.initial_best()};
}

long solved_count(const std::vector<SolverRecord>& records, const std::string& solver, double tau) {
  long n = 0;
  for (const auto& r : records) {
    if (r.solver == solver && evals_to_accuracy(r, tau)) ++n;
  }
  return n;
}

// 1. SDR benefit in the ambient space.
void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const ObjectiveSpec obj = make_objective("ackley", 10);
  std::vector<double> on, off;
  int positive = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig c = config10(Algorithm::bo_sdr, seed);
    c.sdr.xi = 5;
    on.push_back(bo_sdr(obj, c).final_best());
    c.use_sdr = false;
    off.push_back(bo_sdr(obj, c).final_best());
    positive += off.back() - on.back() > 0.0;
  }
  report("1", "SDR benefit, ambient (10-D Ackley, B=150, 5 seeds)",
         mean(on) <= mean(off) && positive >= 4,
         "mean SDR " + num(mean(on)) + " vs no-SDR " + num(mean(off)) + ", gap positive in " +
             std::to_string(positive) + "/5; SDR " + list(on) + " no-SDR " + list(off) + " (" +
             num(seconds_since(t0)) + " s)");
}

// 2. SDR benefit in the latent space.
void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (const std::string fn : {"ackley", "rosenbrock"}) {
    const ObjectiveSpec obj = make_objective(fn, 10);
    const TrainedVAE vae = pretrained("VAE-4.2", obj, 2000);
    std::vector<double> on, off;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RunConfig c = config10(Algorithm::v_bovae, seed);
      on.push_back(bo_vae(obj, vae.model, vae.pool, c).final_best());
      c.use_sdr = false;
      off.push_back(bo_vae(obj, vae.model, vae.pool, c).final_best());
    }
    pass &= mean(on) <= mean(off);
    detail += fn + ": on " + num(mean(on)) + " " + list(on) + " off " + num(mean(off)) + " " +
              list(off) + "; ";
  }
  report("2", "SDR benefit, latent (VAE-4.2, M=2000, B=150, 5 seeds)", pass,
         detail + "(" + num(seconds_since(t0)) + " s)");
}

// 3. Latent-dimension degradation.
void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const ObjectiveSpec obj = make_objective("ackley", 100);
  std::vector<double> lo, hi;
  const TrainedVAE v2 = pretrained("VAE-4.3", obj, 10000);
  const TrainedVAE v10 = pretrained("VAE-4.4", obj, 10000);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const RunConfig c = config100(Algorithm::v_bovae, seed);
    lo.push_back(bo_vae(obj, v2.model, v2.pool, c).final_best());
    hi.push_back(bo_vae(obj, v10.model, v10.pool, c).final_best());
  }
  report("3", "latent-dimension ordering (100-D Ackley, V-BOVAE, d=2 vs d=10, 3 seeds)",
         mean(lo) <= mean(hi),
         "d=2 " + num(mean(lo)) + " " + list(lo) + ", d=10 " + num(mean(hi)) + " " + list(hi) +
             " (" + num(seconds_since(t0)) + " s)");
}

// 4. Profile-table direction on Test Set 1.
void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SolverRecord> records;
  for (const std::string fn : {"ackley", "rosenbrock", "styblinski_tang"}) {
    const ObjectiveSpec obj = scale_domain(make_objective(fn, 100), -3.0, 3.0);
    const TrainedVAE vae = pretrained("VAE-4.3", obj, 10000);
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      records.push_back(record_of(bo_sdr(obj, config100(Algorithm::bo_sdr, seed)), "BO-SDR", fn));
      records.push_back(record_of(bo_vae(obj, vae.model, vae.pool, config100(Algorithm::v_bovae, seed)),
                                  "V-BOVAE", fn));
      records.push_back(record_of(
          bo_vae_dml(obj, vae.model, vae.pool, config100(Algorithm::s_bovae, seed)), "S-BOVAE", fn));
      records.push_back(record_of(
          bo_vae_retrain(obj, vae.model, vae.pool, config100(Algorithm::r_bovae, seed)), "R-BOVAE",
          fn));
    }
  }
  const long base = solved_count(records, "BO-SDR", 0.1);
  bool pass = true;
  std::string detail = "solved of 6 at tau=0.1: BO-SDR " + std::to_string(base);
  for (const std::string s : {"V-BOVAE", "S-BOVAE", "R-BOVAE"}) {
    const long n = solved_count(records, s, 0.1);
    pass &= n > base;
    detail += ", " + s + " " + std::to_string(n);
  }
  std::string finals;
  for (const auto& r : records) {
    finals += " " + r.solver + "/" + r.problem + "=" + num(r.history.back()) + "(f0 " + num(r.f0_star) + ")";
  }
  report("4", "profile direction (Test Set 1, D=100 on [-3,3], VAE-4.3, B=150, 2 seeds)", pass,
         detail + ";" + finals + " (" + num(seconds_since(t0)) + " s)");
}

// 5. DML variant against REMBO on low-rank problems.
void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SolverRecord> records;
  std::uint64_t rotation = 1;
  for (const std::string fn : {"ackley", "styblinski_tang"}) {
    const ObjectiveSpec base = scale_domain(make_objective(fn, 4), -1.0, 1.0);
    const ObjectiveSpec obj = make_low_rank(base, 100, rotation++).objective();
    const TrainedVAE vae = pretrained("VAE-4.6", obj, 10000);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      records.push_back(record_of(
          bo_vae_dml(obj, vae.model, vae.pool, config100(Algorithm::s_bovae, seed)), "S-BOVAE", fn));
      RunConfig rc = config100(Algorithm::rembo, seed);
      records.push_back(record_of(rembo(obj, 4, rc), "REMBO", fn));
    }
  }
  const long s = solved_count(records, "S-BOVAE", 0.1), r = solved_count(records, "REMBO", 0.1);
  std::string finals;
  for (const auto& rec : records) {
    finals += " " + rec.solver + "/" + rec.problem + "=" + num(rec.history.back() - rec.f_star) +
              "(f0 gap " + num(rec.f0_star - rec.f_star) + ")";
  }
  report("5", "DML vs REMBO (low-rank Ackley/ST, D=100, d_e=4, B=150, 3 seeds)", s >= r,
         "solved of 6 at tau=0.1: S-BOVAE " + std::to_string(s) + ", REMBO " + std::to_string(r) +
             (s == 0 && r == 0 ? " (holds vacuously: neither solver solves an instance)" : "") +
             ";" + finals + " (" + num(seconds_since(t0)) + " s)");
}

// 6a. GP posterior vs dense inverse.
bool gp_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const int n = 4 + static_cast<int>(seed % 9), m = 1 + static_cast<int>(seed % 4);
    Mat X(n, m);
    for (int i = 0; i < n; ++i) X.row(i) = (2.0 * standard_normal(m, rng)).transpose();
    const Vec y = standard_normal(n, rng);
    const KernelParams p{0.5 + 0.1 * static_cast<double>(seed), 1.3, 1e-2};
    Mat K(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) K(i, j) = kernel_eval(p, X.row(i), X.row(j)) + (i == j ? p.noise_variance : 0);
    }
    const Mat Ki = K.inverse();
    const GPPosterior gp = GPPosterior::condition(X, y, p, false);
    for (int q = 0; q < 5; ++q) {
      const Vec x = 2.0 * standard_normal(m, rng);
      Vec k(n);
      for (int i = 0; i < n; ++i) k[i] = kernel_eval(p, X.row(i), x);
      const Prediction pr = gp.predict(x);
      worst = std::max({worst, std::abs(pr.mean - k.dot(Ki * y)),
                        std::abs(pr.variance - std::max(0.0, p.signal_variance - k.dot(Ki * k)))});
    }
  }
  report("6a", "GP posterior equals dense-inverse oracle on 20 instances", worst <= 1e-9,
         "max error " + num(worst));
  return worst <= 1e-9;
}

// 6b. EI vs Monte Carlo; exact zero at std = 0.
void ei_oracle() {
  Rng rng(7);
  std::uniform_real_distribution<double> u(-2, 2), s(0.05, 3);
  std::normal_distribution<double> g(0, 1);
  double worst_z = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double m = u(rng), sd = s(rng), best = u(rng);
    double sum = 0, sum2 = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double v = std::max(0.0, best - (m + sd * g(rng)));
      sum += v;
      sum2 += v * v;
    }
    const double mc = sum / n, se = std::sqrt((sum2 / n - mc * mc) / n);
    worst_z = std::max(worst_z, std::abs(expected_improvement(m, sd, best) - mc) / se);
  }
  const bool zero = expected_improvement(0.0, 0.0, 1.0) == 0.0 && expected_improvement(2.0, 0.0, 1.0) == 0.0;
  report("6b", "EI matches 1e6-sample Monte Carlo within 3 SE; zero at std=0", worst_z <= 3.0 && zero,
         "worst |z| " + num(worst_z));
}

// 6c. KL closed form vs quadrature.
void kl_oracle() {
  Rng rng(3);
  std::uniform_real_distribution<double> um(-2, 2), uv(0.1, 3);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double mu = um(rng), s2 = uv(rng), sd = std::sqrt(s2);
    const double lo = mu - 14 * sd, hi = mu + 14 * sd;
    const int n = 200000;
    const double h = (hi - lo) / n;
    auto f = [&](double x) {
      const double lq = -0.5 * std::log(2 * std::numbers::pi * s2) - 0.5 * (x - mu) * (x - mu) / s2;
      const double lp = -0.5 * std::log(2 * std::numbers::pi) - 0.5 * x * x;
      return std::exp(lq) * (lq - lp);
    };
    double q = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) q += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    q *= h / 3;
    worst = std::max(worst, std::abs(kl_divergence(Vec::Constant(1, mu), Vec::Constant(1, s2)) - q));
  }
  const bool zero = kl_divergence(Vec::Zero(1), Vec::Ones(1)) == 0.0;
  report("6c", "KL closed form matches quadrature within 1e-6; KL(N(0,1)||N(0,1)) = 0", worst <= 1e-6 && zero,
         "max error " + num(worst));
}

// Largest relative deviation between an analytic gradient and central differences.
template <class Loss>
double fd_check(const Vec& p0, const Vec& grad, Loss&& loss) {
  double worst = 0.0;
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Vec p = p0;
    p[i] += h;
    const double up = loss(p);
    p[i] -= 2 * h;
    const double fd = (up - loss(p)) / (2 * h);
    worst = std::max(worst, std::abs(grad[i] - fd) / std::max(std::abs(fd), 1e-3));
  }
  return worst;
}

// 6d. nn / vae / dml gradients.
void gradient_oracle() {
  Rng rng(5);
  MLP net({4, 7, 3}, rng);
  Mat X(4, 6), G(3, 6);
  for (int j = 0; j < 6; ++j) {
    X.col(j) = standard_normal(4, rng);
    G.col(j) = standard_normal(3, rng);
  }
  const double e_nn = fd_check(net.flat_params(), net.backward(net.forward(X), G).flat(), [&](const Vec& p) {
    MLP n = net;
    n.set_flat_params(p);
    return (n.predict(X).array() * G.array()).sum();
  });

  VAEModel m = make_vae(6, 2, {4}, 9);
  Mat Xb(6, 8), noise(2, 8);
  for (int j = 0; j < 8; ++j) {
    Xb.col(j) = standard_normal(6, rng);
    noise.col(j) = standard_normal(2, rng);
  }
  auto with = [&](const Vec& p) {
    VAEModel c = m;
    set_vae_params(c, p);
    return c;
  };
  const double e_vae = fd_check(vae_params(m), elbo_backward(m, elbo_forward(m, Xb, 0.6, noise), 0.6),
                                [&](const Vec& p) { return elbo(with(p), Xb, 0.6, noise).loss; });

  const std::vector<double> f{0.0, 0.004, 0.3, 0.305, 0.6, 0.602, 0.9, 1.0};
  const DMLConfig cfg;
  const auto triplets = sample_triplets(f, cfg.eta, 16, rng);
  const double e_dml = fd_check(vae_params(m), dml_elbo_with_grad(m, Xb, f, 0.6, noise, triplets, cfg).second,
                                [&](const Vec& p) { return dml_elbo(with(p), Xb, f, 0.6, noise, triplets, cfg); });
  const double worst = std::max({e_nn, e_vae, e_dml});
  report("6d", "nn/vae/dml gradients match central differences within 1e-3 relative", worst <= 1e-3,
         "nn " + num(e_nn) + ", vae " + num(e_vae) + ", dml " + num(e_dml));
}

// 6e. SDR analytic cases.
void sdr_oracle() {
  SDRParams p;
  p.t = 1e-9;
  const Box bounds = Box::cube(2, -1, 1);
  SDRState s = sdr_init(Vec::Zero(2), bounds, p);
  const bool shrink = std::abs(sdr_update(s, Vec::Zero(2)).r[0] - p.eta * 2.0) <= 1e-15;
  const bool osc = std::abs(sdr_contraction(p, 1.0, -1.0) - p.gamma_o) <= 1e-15;
  const bool pan = std::abs(sdr_contraction(p, 1.0, 1.0) - p.gamma_p) <= 1e-15;
  double worst = 0.0;
  for (int k = 1; k <= 60; ++k) {
    s = sdr_update(s, Vec::Zero(2));
    worst = std::max(worst, std::abs(s.r[0] - std::pow(p.eta, k) * 2.0));
  }
  report("6e", "SDR stationary shrink by eta, oscillation gamma_o, pan gamma_p, geometric decay",
         shrink && osc && pan && worst <= 1e-12, "decay max error " + num(worst));
}

// 6f. Soft-triplet loss.
void triplet_oracle() {
  const DMLConfig cfg;
  const double l = soft_triplet_loss(Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, Vec{{0.0, 1.0}}, 0.0, 0.0, 1.0, cfg);
  const double v1 = soft_triplet_loss(Vec{{0.0}}, Vec{{1.0}}, Vec{{2.0}}, 0.0, 0.5, 1.0, cfg);
  const double v2 = soft_triplet_loss(Vec{{0.0}}, Vec{{1.0}}, Vec{{2.0}}, 0.0, 0.0, 0.001, cfg);
  report("6f", "soft-triplet loss is ln 2 at equal distances; indicator violations give 0",
         std::abs(l - std::log(2.0)) <= 1e-12 && v1 == 0.0 && v2 == 0.0,
         "loss - ln2 = " + num(l - std::log(2.0)));
}

// 6g. Low-rank invariance.
void lowrank_oracle() {
  const ObjectiveSpec base = scale_domain(make_objective("styblinski_tang", 4), -1, 1);
  const LowRankProblem p = make_low_rank(base, 100, 17);
  const Mat null_basis = p.Q.bottomRows(96).transpose();
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = 0.3 * standard_normal(100, rng);
    worst = std::max(worst, std::abs(p(x + null_basis * standard_normal(96, rng)) - p(x)));
  }
  report("6g", "low-rank function constant along the inactive subspace (100 probes)", worst < 1e-8,
         "max change " + num(worst));
}

// 6h. Profiles on the hand-computed two-solver fixture.
void profile_oracle() {
  const std::vector<SolverRecord> r{
      {"A", "P1", 2, {5.0, 2.0, 0.5}, 0.0, 10.0}, {"A", "P2", 1, {0.05}, 0.0, 1.0},
      {"A", "P3", 3, {3.0, 3.0, 3.0}, 0.0, 4.0},  {"B", "P1", 2, {0.9}, 0.0, 10.0},
      {"B", "P2", 1, {0.5, 0.2, 0.1, 0.05}, 0.0, 1.0}, {"B", "P3", 3, {1.0, 0.4}, 0.0, 4.0}};
  const auto perf = performance_profile(r, 0.1);
  const auto data = data_profile(r, 0.1, 3);
  const std::vector<double> pa{1. / 3, 1. / 3, 1. / 3, 1. / 3, 1. / 3, 1. / 3, 1. / 3, 2. / 3, 2. / 3};
  const std::vector<double> pb{2. / 3, 2. / 3, 2. / 3, 2. / 3, 2. / 3, 2. / 3, 2. / 3, 1.0, 1.0};
  const std::vector<double> da{0.0, 2. / 3, 2. / 3, 2. / 3}, db{0.0, 2. / 3, 1.0, 1.0};
  const bool ok = perf.size() == 2 && perf[0].fraction == pa && perf[1].fraction == pb &&
                  data[0].fraction == da && data[1].fraction == db &&
                  !evals_to_accuracy(r[2], 0.1).has_value();
  report("6h", "performance/data profiles reproduce the two-solver fixture; unsolved is infinite", ok, "");
}

// 6i. Byte-identical CSVs from two runs of one config.
void determinism_oracle() {
  const std::string cfg_text = R"(
[experiment]
record_timing = false
[run sdr]
algorithm = bo_sdr
function = ackley
dim = 5
budget = 10
seeds = 1 2
[run vae]
algorithm = r_bovae
function = rosenbrock
dim = 10
vae = VAE-4.2
vae_pool = 500
vae_epochs = 5
budget = 10
q = 5
seeds = 3
)";
  std::istringstream is(cfg_text);
  const ExperimentConfig cfg = parse_config(is);
  const fs::path root = fs::temp_directory_path() / ("lsbo_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::ostringstream log;
  RunOptions opt;
  opt.output_dir = (root / "a").string();
  run_experiment(cfg, cfg_text, opt, log);
  opt.output_dir = (root / "b").string();
  run_experiment(cfg, cfg_text, opt, log);
  bool same = true;
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (e.path().extension() != ".csv") continue;
    const fs::path other = root / "b" / fs::relative(e.path(), root / "a");
    same &= fs::exists(other) && read_file(e.path()) == read_file(other);
    ++files;
  }
  fs::remove_all(root);
  report("6i", "two runs of one config produce byte-identical CSVs", same && files == 3,
         std::to_string(files) + " trace files compared");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> which;
  for (int i = 1; i < argc; ++i) which.insert(std::atoi(argv[i]));
  auto want = [&](int c) { return which.empty() || which.count(c); };
  try {
    if (want(6)) {
      gp_oracle();
      ei_oracle();
      kl_oracle();
      gradient_oracle();
      sdr_oracle();
      triplet_oracle();
      lowrank_oracle();
      profile_oracle();
      determinism_oracle();
    }
    if (want(1)) criterion1();
    if (want(2)) criterion2();
    if (want(3)) criterion3();
    if (want(4)) criterion4();
    if (want(5)) criterion5();
  } catch (const std::exception& e) {
    std::cout << "FAIL [error] " << e.what() << std::endl;
    return 1;
  }
  std::cout << failures << " failure(s)" << std::endl;
  return failures == 0 ? 0 : 1;
}
