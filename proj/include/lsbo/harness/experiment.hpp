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

// Experiment runner: objectives from config, cached VAE pre-training, a
// worker pool over (run, seed), and the aggregate / plot / profile reports.
//
// Output layout under the results directory:
//   <run>/seed_<s>.csv          trace (see io.hpp)
//   <run>/seed_<s>.meta.json    metadata sidecar
//   <run>/seed_<s>.timing.csv   wall-clock per evaluation (optional)
//   <run>/aggregate.csv         mean/std of the optimality gap
//   plots/<instance>.svg        convergence plot per problem instance
//   profiles/...                performance/data profiles and solved table
//   manifest.json               config hash, seeds, versions, file hashes

#pragma once

#include "lsbo/harness/config.hpp"
#include "lsbo/harness/io.hpp"
#include "lsbo/harness/plot.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>

namespace lsbo::harness {

inline constexpr const char* kVersion = "0.1.0";

inline ObjectiveSpec build_objective(const ProblemSpec& p, std::uint64_t noise_seed) {
  ObjectiveSpec obj = make_objective(p.function, p.dim);
  if (p.low_rank_dim > 0) {
    if (p.domain) throw ConfigError("low-rank problems always live on [-1, 1]^D; drop 'domain'");
    obj = make_low_rank(scale_domain(obj, -1.0, 1.0), p.low_rank_dim, p.rotation_seed).objective();
  } else if (p.domain) {
    obj = scale_domain(obj, p.domain->first, p.domain->second);
  }
  if (p.noise > 0.0) obj = as_objective(NoisyObjective{obj, p.noise, noise_seed});
  return obj;
}

struct TrainedVAE {
  VAEModel model;
  Mat pool;
  std::string key;
};

struct ResolvedVAE {
  VAEArchitecture arch;
  int pool = 0;
  TrainConfig train;
  std::uint64_t init_seed = 0;
  std::uint64_t data_seed = 0;
};

inline ResolvedVAE resolve_vae(const VAESpec& v) {
  ResolvedVAE r;
  r.arch = vae_architecture(v.architecture);
  r.pool = v.pool > 0 ? v.pool : pretrain_pool_size(r.arch.D);
  r.train = pretrain_config(r.arch.D, mix_seed(v.seed, 0, 42));
  if (v.epochs > 0) r.train.epochs = v.epochs;
  if (v.batch > 0) r.train.batch = v.batch;
  r.train.lr = v.lr;
  r.init_seed = mix_seed(v.seed, 0, 41);
  r.data_seed = mix_seed(v.seed, 0, 40);
  return r;
}

inline std::string vae_cache_key(const ResolvedVAE& r, const Box& domain) {
  std::ostringstream os;
  os << "lsbo-vae-v1|" << r.arch.name << '|' << r.arch.D << '|' << r.arch.d << '|';
  for (int h : r.arch.hidden) os << h << ',';
  os << '|' << r.pool << '|' << r.train.epochs << '|' << r.train.batch << '|'
     << fmt_double(r.train.lr) << '|' << r.train.seed << '|' << r.init_seed << '|' << r.data_seed;
  if (r.train.schedule) {
    const auto& s = *r.train.schedule;
    os << '|' << fmt_double(s.beta_i) << ',' << fmt_double(s.beta_f) << ',' << s.beta_s << ','
       << fmt_double(s.beta_a);
  }
  for (Eigen::Index i = 0; i < domain.dim(); ++i) {
    os << '|' << fmt_double(domain.lo[i]) << ',' << fmt_double(domain.hi[i]);
  }
  return sha256_hex(os.str()).substr(0, 24);
}

inline fs::path default_cache_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("LSBO_CACHE_DIR"); env && *env) return env;
  if (!cfg.cache_dir.empty()) return cfg.cache_dir;
  return fs::path(cfg.output_dir) / ".cache";
}

/// Loads a pre-trained VAE from the cache, training and storing it on a miss.
inline TrainedVAE obtain_vae(const VAESpec& spec, const ObjectiveSpec& obj, const fs::path& cache,
                             bool allow_train, std::ostream& log) {
  const ResolvedVAE r = resolve_vae(spec);
  if (r.arch.D != obj.dim()) {
    throw ConfigError(r.arch.name + " expects D = " + std::to_string(r.arch.D) + " but " +
                      obj.name + " has D = " + std::to_string(obj.dim()));
  }
  TrainedVAE out;
  out.key = vae_cache_key(r, obj.domain);
  out.pool = generate_training_data(r.arch.D, r.pool, obj.domain, r.data_seed);
  const fs::path model_path = cache / (out.key + ".vae");
  if (fs::exists(model_path)) {
    out.model = load_vae(model_path.string());
    return out;
  }
  if (!allow_train) {
    throw ConfigError("no cached checkpoint for " + r.arch.name + " (" + model_path.string() +
                      ") and training is disabled");
  }
  log << "training " << r.arch.name << " on " << r.pool << " points for " << r.train.epochs
      << " epochs\n";
  const TrainResult tr = train(make_vae(r.arch, r.init_seed), out.pool, r.train);
  out.model = tr.model;
  std::ostringstream bin;
  write_vae(bin, out.model);
  json side;
  side["architecture"] = r.arch.name;
  side["D"] = r.arch.D;
  side["d"] = r.arch.d;
  side["encoder_widths"] = out.model.encoder.widths();
  side["decoder_widths"] = out.model.decoder.widths();
  side["activation"] = "softplus";
  side["training_seed"] = r.train.seed;
  side["pool"] = r.pool;
  side["epochs"] = r.train.epochs;
  side["final_loss"] = tr.loss_history.empty() ? 0.0 : tr.loss_history.back();
  write_file_atomic(cache / (out.key + ".json"), side.dump(2) + "\n");
  write_file_atomic(model_path, bin.str());
  return out;
}

/// Pre-trains (or loads) every VAE referenced by the config; returns the
/// checkpoint keys in run order.
inline std::vector<std::string> train_vaes(const ExperimentConfig& cfg, std::ostream& log) {
  const fs::path cache = default_cache_dir(cfg);
  fs::create_directories(cache);
  std::vector<std::string> keys;
  for (const auto& r : cfg.runs) {
    if (!r.vae) continue;
    keys.push_back(obtain_vae(*r.vae, build_objective(r.problem, 0), cache, true, log).key);
    log << r.name << ": " << (cache / (keys.back() + ".vae")).string() << "\n";
  }
  return keys;
}

/// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  const int k = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline fs::path trace_stem(const fs::path& out, const std::string& run, std::uint64_t seed) {
  return out / run / ("seed_" + std::to_string(seed));
}

/// Hashes every file under dir except the manifest itself and the VAE cache.
inline json file_hashes(const fs::path& dir, const fs::path& skip) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir);
    if (rel == "manifest.json") continue;
    if (!skip.empty() &&
        fs::weakly_canonical(e.path()).string().rfind(skip.string() + "/", 0) == 0) {
      continue;
    }
    if (rel.string().find(".tmp.") != std::string::npos) continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json j = json::object();
  for (const auto& f : files) j[f.generic_string()] = sha256_hex(read_file(dir / f));
  return j;
}

/// Rewrites the file table of dir/manifest.json, keeping its other fields.
inline void refresh_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  json m = fs::exists(path) ? json::parse(read_file(path)) : json::object();
  fs::path skip;
  if (m.contains("cache_dir")) {
    const fs::path c = fs::weakly_canonical(fs::path(m["cache_dir"].get<std::string>()));
    skip = c;
  }
  m["files"] = file_hashes(dir, skip.empty() ? fs::path() : skip);
  write_file_atomic(path, m.dump(2) + "\n");
}

struct RunOptions {
  int jobs = 0;  // 0: use the config value
  bool allow_train = true;
  std::string output_dir;  // overrides the config when set
};

inline fs::path run_experiment(const ExperimentConfig& cfg, const std::string& config_bytes,
                               const RunOptions& opt = {}, std::ostream& log = std::cerr) {
  const fs::path out = opt.output_dir.empty() ? fs::path(cfg.output_dir) : fs::path(opt.output_dir);
  ExperimentConfig c = cfg;
  c.output_dir = out.string();
  const fs::path cache = default_cache_dir(c);
  fs::create_directories(out);
  fs::create_directories(cache);

  // Pre-train (or load) every VAE once, keyed by architecture, data and seed.
  std::map<std::string, TrainedVAE> vaes;
  std::map<std::string, std::string> run_vae;
  for (const auto& r : cfg.runs) {
    if (!r.vae) continue;
    const ObjectiveSpec obj = build_objective(r.problem, 0);
    TrainedVAE t = obtain_vae(*r.vae, obj, cache, opt.allow_train, log);
    run_vae[r.name] = t.key;
    vaes.try_emplace(t.key, std::move(t));
  }

  struct Task {
    const RunSpec* run;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& r : cfg.runs) {
    for (auto s : r.seeds) tasks.push_back({&r, s});
  }
  std::mutex log_mu;
  parallel_for(tasks.size(), opt.jobs > 0 ? opt.jobs : cfg.jobs, [&](std::size_t i) {
    const RunSpec& r = *tasks[i].run;
    const std::uint64_t seed = tasks[i].seed;
    const ObjectiveSpec obj = build_objective(r.problem, mix_seed(seed, 0, 50));
    RunConfig rc = r.run;
    rc.seed = seed;
    const TrainedVAE* vae = r.vae ? &vaes.at(run_vae.at(r.name)) : nullptr;
    if (rc.latent_bound && vae) {
      const double half = rc.latent_bound->hi[0];
      rc.latent_bound = Box::cube(vae->model.d, -half, half);
    } else {
      rc.latent_bound.reset();
    }
    if (rc.algorithm == Algorithm::rembo && rc.rembo_effective_dim == 0) {
      rc.rembo_effective_dim = static_cast<int>(make_objective(r.problem.function, r.problem.dim).dim());
    }
    const RunTrace trace =
        run_algorithm(obj, rc, vae ? &vae->model : nullptr, vae ? &vae->pool : nullptr);
    TraceMeta m;
    m.run = r.name;
    m.algorithm = algorithm_id(rc.algorithm);
    m.solver = r.solver;
    m.problem = obj.name;
    m.instance = r.instance;
    m.f_star = obj.f_star;
    m.n_p = static_cast<long>(obj.dim());
    m.search_dim = static_cast<long>(trace.search_dim);
    m.seed = seed;
    m.n_initial = trace.n_initial;
    const fs::path stem = trace_stem(out, r.name, seed);
    write_file_atomic(stem.string() + ".csv", trace_csv(trace));
    write_file_atomic(stem.string() + ".meta.json", meta_json(m));
    if (cfg.record_timing) write_file_atomic(stem.string() + ".timing.csv", timing_csv(trace));
    std::lock_guard lock(log_mu);
    log << r.name << " seed " << seed << ": best " << fmt_double(trace.final_best()) << "\n";
  });

  json m;
  m["tool"] = "lsbo";
  m["version"] = kVersion;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  m["config_sha256"] = sha256_hex(config_bytes);
  m["cache_dir"] = fs::weakly_canonical(cache).string();
  json runs = json::array();
  for (const auto& r : cfg.runs) {
    json jr;
    jr["name"] = r.name;
    jr["algorithm"] = algorithm_id(r.run.algorithm);
    jr["solver"] = r.solver;
    jr["seeds"] = r.seeds;
    if (r.vae) jr["vae_checkpoint"] = run_vae.at(r.name);
    runs.push_back(jr);
  }
  m["runs"] = runs;
  write_file_atomic(out / "manifest.json", m.dump(2) + "\n");
  refresh_manifest(out);
  return out;
}

/// Optimality-gap series per trace: best of the initial design, then the
/// incumbent after each loop evaluation.
inline std::vector<double> gap_series(const StoredTrace& t) {
  const double fs = t.meta.has_f_star ? t.meta.f_star : 0.0;
  std::vector<double> s{t.initial_best() - fs};
  for (double v : t.loop_history()) s.push_back(v - fs);
  return s;
}

inline std::map<std::string, std::vector<const StoredTrace*>> group_by(
    const std::vector<StoredTrace>& traces, std::string TraceMeta::*field) {
  std::map<std::string, std::vector<const StoredTrace*>> g;
  for (const auto& t : traces) g[t.meta.*field].push_back(&t);
  return g;
}

inline void write_aggregates(const fs::path& dir, std::ostream& log = std::cerr) {
  const auto traces = load_traces(dir);
  for (const auto& [run, group] : group_by(traces, &TraceMeta::run)) {
    std::vector<std::vector<double>> series;
    for (const auto* t : group) series.push_back(gap_series(*t));
    write_file_atomic(dir / run / "aggregate.csv", aggregate_csv(aggregate(series, &log)));
  }
  refresh_manifest(dir);
}

inline void write_plots(const fs::path& dir, bool log_y, std::ostream& log = std::cerr) {
  const auto traces = load_traces(dir);
  for (const auto& [instance, group] : group_by(traces, &TraceMeta::instance)) {
    std::map<std::string, std::vector<std::vector<double>>> by_run;
    std::map<std::string, std::string> label;
    for (const auto* t : group) {
      by_run[t->meta.run].push_back(gap_series(*t));
      label[t->meta.run] = t->meta.solver;
    }
    std::vector<Series> series;
    for (const auto& [run, s] : by_run) series.push_back({label[run], aggregate(s, &log)});
    PlotOptions opt;
    opt.log_y = log_y;
    opt.title = instance;
    write_file_atomic(dir / "plots" / (instance + ".svg"), render_convergence(series, opt));
  }
  refresh_manifest(dir);
}

inline std::vector<SolverRecord> solver_records(const std::vector<StoredTrace>& traces,
                                                std::ostream& log) {
  std::vector<SolverRecord> out;
  for (const auto& t : traces) {
    if (!t.meta.has_f_star) {
      log << "warning: " << t.csv.string() << " has no f_star; excluded from profiles\n";
      continue;
    }
    SolverRecord r;
    r.solver = t.meta.solver;
    r.problem = t.meta.instance + "#" + std::to_string(t.meta.seed);
    r.n_p = static_cast<int>(t.meta.n_p);
    r.history = t.loop_history();
    r.f_star = t.meta.f_star;
    r.f0_star = t.initial_best();
    out.push_back(std::move(r));
  }
  return out;
}

/// Row order for solved tables: the four paper rows, REMBO, then the rest.
inline std::vector<std::string> table_order(std::vector<std::string> solvers) {
  static const std::vector<std::string> preferred = {"BO-SDR", "V-BOVAE", "S-BOVAE", "R-BOVAE",
                                                     "REMBO"};
  std::vector<std::string> out;
  for (const auto& p : preferred) {
    if (std::find(solvers.begin(), solvers.end(), p) != solvers.end()) out.push_back(p);
  }
  std::sort(solvers.begin(), solvers.end());
  for (const auto& s : solvers) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

inline std::string tau_tag(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", tau);
  return buf;
}

inline std::string curves_csv(const std::vector<ProfileCurve>& curves) {
  std::ostringstream os;
  os << "solver,alpha,fraction\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.alpha.size(); ++i) {
      os << c.solver << ',' << fmt_double(c.alpha[i]) << ',' << fmt_double(c.fraction[i]) << '\n';
    }
  }
  return os.str();
}

/// Per-tau performance and data profiles plus solved.csv / solved.md.
inline void write_profiles(const fs::path& dir, const std::vector<double>& taus, int N_g,
                           std::ostream& log = std::cerr) {
  const auto records = solver_records(load_traces(dir), log);
  const fs::path pd = dir / "profiles";
  std::map<std::string, std::vector<double>> solved;
  std::vector<std::string> solvers;
  for (const auto& r : records) {
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) {
      solvers.push_back(r.solver);
    }
  }
  for (double tau : taus) {
    const std::string tag = tau_tag(tau);
    if (!records.empty()) {
      const auto perf = performance_profile(records, tau);
      const auto data = data_profile(records, tau, N_g);
      write_file_atomic(pd / ("performance_tau" + tag + ".csv"), curves_csv(perf));
      write_file_atomic(pd / ("data_tau" + tag + ".csv"), curves_csv(data));
      write_file_atomic(pd / ("performance_tau" + tag + ".svg"),
                        render_profile(perf, true, "performance profile, tau = " + tag, "log2 alpha"));
      write_file_atomic(pd / ("data_tau" + tag + ".svg"),
                        render_profile(data, false, "data profile, tau = " + tag, "alpha"));
    }
    const auto fr = solved_fractions(records, tau);
    for (const auto& s : solvers) {
      double v = 0.0;
      for (const auto& [name, f] : fr) {
        if (name == s) v = f;
      }
      solved[s].push_back(v);
    }
  }
  std::ostringstream csv, md;
  csv << "solver";
  md << "| Algorithm |";
  for (double tau : taus) {
    csv << ",tau_" << tau_tag(tau);
    md << " tau = " << tau_tag(tau) << " |";
  }
  csv << '\n';
  md << "\n|---|";
  for (std::size_t i = 0; i < taus.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& s : table_order(solvers)) {
    csv << s;
    md << "| " << s << " |";
    for (double v : solved[s]) {
      csv << ',' << fmt_double(v);
      char buf[16];
      std::snprintf(buf, sizeof buf, " %.0f%% |", 100.0 * v);
      md << buf;
    }
    csv << '\n';
    md << '\n';
  }
  write_file_atomic(pd / "solved.csv", csv.str());
  write_file_atomic(pd / "solved.md", md.str());
  refresh_manifest(dir);
}

}  // namespace lsbo::harness
