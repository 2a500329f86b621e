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

// Experiment configuration files.
//
// INI syntax: an optional [experiment] section followed by one [run <name>]
// section per run. Example:
//
//   [experiment]
//   output = results
//   jobs = 2
//
//   [run ackley10]
//   algorithm = v_bovae
//   function = ackley
//   dim = 10
//   vae = VAE-4.2
//   vae_pool = 2000
//   budget = 150
//   seeds = 1 2 3
//
// The full key list is in README.md. Unknown keys are errors.

#pragma once

#include "lsbo/algorithms.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace lsbo::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemSpec {
  std::string function;
  int dim = 0;
  std::optional<std::pair<double, double>> domain;  // rescale to [lo, hi]^D
  int low_rank_dim = 0;  // > 0: embed in this ambient dimension via a rotation
  std::uint64_t rotation_seed = 0;
  double noise = 0.0;
};

struct VAESpec {
  std::string architecture;
  int pool = 0;    // M; 0 selects the table value
  int epochs = 0;  // 0 selects the table value
  int batch = 0;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct RunSpec {
  std::string name;
  std::string solver;    // label used in profiles; defaults to the algorithm label
  std::string instance;  // problem key used in profiles; defaults to the run name
  ProblemSpec problem;
  RunConfig run;
  std::optional<VAESpec> vae;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
  std::string output_dir = "results";
  std::string cache_dir;  // empty: LSBO_CACHE_DIR or <output>/.cache
  int jobs = 1;
  bool log_y = true;
  bool record_timing = true;
  std::vector<RunSpec> runs;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  std::istringstream is(raw);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    std::string w;
    is >> w;
    if (w == "true" || w == "1" || w == "yes" || w == "on") return true;
    if (w == "false" || w == "0" || w == "no" || w == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + raw + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return raw;
  } else {
    if (!(is >> v)) throw ConfigError("key '" + key + "': cannot parse '" + raw + "'");
    std::string rest;
    if (is >> rest) throw ConfigError("key '" + key + "': trailing text in '" + raw + "'");
    return v;
  }
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree& tree)
      : name_(std::move(name)), tree_(tree) {}

  template <class T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) out = parse_value<T>(key, trim(*v));
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return tree_.get_optional<std::string>(key).has_value();
  }

  std::string raw(const std::string& key) {
    used_.insert(key);
    return trim(tree_.get<std::string>(key));
  }

  void reject_unknown() const {
    for (const auto& kv : tree_) {
      if (!used_.count(kv.first)) {
        throw ConfigError("[" + name_ + "]: unknown key '" + kv.first + "'");
      }
    }
  }

 private:
  std::string name_;
  const boost::property_tree::ptree& tree_;
  std::set<std::string> used_;
};

inline RunSpec parse_run(const std::string& name, const boost::property_tree::ptree& tree) {
  Section s("run " + name, tree);
  RunSpec r;
  r.name = name;
  RunConfig& c = r.run;

  std::string algorithm;
  s.get("algorithm", algorithm);
  if (algorithm.empty()) throw ConfigError("[run " + name + "]: missing 'algorithm'");
  try {
    c.algorithm = parse_algorithm(algorithm);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[run " + name + "]: " + e.what());
  }

  auto& p = r.problem;
  s.get("function", p.function);
  if (p.function.empty()) throw ConfigError("[run " + name + "]: missing 'function'");
  s.get("dim", p.dim);
  if (s.has("domain")) {
    const auto parts = split_list(s.raw("domain"));
    if (parts.size() != 2) throw ConfigError("[run " + name + "]: domain needs 'lo hi'");
    p.domain = {parse_value<double>("domain", parts[0]), parse_value<double>("domain", parts[1])};
    if (!(p.domain->first < p.domain->second)) {
      throw ConfigError("[run " + name + "]: domain lo must be below hi");
    }
  }
  s.get("low_rank_dim", p.low_rank_dim);
  s.get("rotation_seed", p.rotation_seed);
  s.get("noise", p.noise);

  s.get("budget", c.B);
  s.get("q", c.q);
  s.get("initial", c.N);
  if (s.has("latent_bound")) {
    c.latent_bound = Box();  // resolved against d once the VAE is known
    double half = 5.0;
    s.get("latent_bound", half);
    if (!(half > 0.0)) throw ConfigError("[run " + name + "]: latent_bound must be positive");
    c.latent_bound->lo = Vec::Constant(1, -half);
    c.latent_bound->hi = Vec::Constant(1, half);
  }
  s.get("use_sdr", c.use_sdr);
  s.get("sdr_gamma_o", c.sdr.gamma_o);
  s.get("sdr_gamma_p", c.sdr.gamma_p);
  s.get("sdr_eta", c.sdr.eta);
  s.get("sdr_t", c.sdr.t);
  s.get("sdr_xi", c.sdr.xi);
  s.get("dml_eta", c.dml.eta);
  s.get("dml_nu", c.dml.nu);
  s.get("dml_rho", c.dml.rho);
  s.get("dml_p", c.dml.p);
  s.get("dml_triplets", c.dml.triplets_per_batch);
  s.get("retrain_epochs", c.retrain_epochs);
  s.get("retrain_batch", c.retrain_batch);
  s.get("retrain_lr", c.retrain_lr);
  s.get("stochastic_decode", c.stochastic_decode);
  s.get("rembo_de", c.rembo_effective_dim);
  s.get("gp_restarts", c.gp_restarts);
  s.get("gp_warm_restarts", c.gp_warm_restarts);
  s.get("gp_max_iters", c.gp_max_iters);
  s.get("acq_raw", c.acq.n_raw);
  s.get("acq_refine", c.acq.n_refine);
  s.get("acq_steps", c.acq.max_local_steps);

  std::uint64_t seed = 0;
  int reps = 1;
  s.get("seed", seed);
  s.get("repetitions", reps);
  if (reps < 1) throw ConfigError("[run " + name + "]: repetitions must be >= 1");
  if (s.has("seeds")) {
    for (const auto& w : split_list(s.raw("seeds"))) {
      r.seeds.push_back(parse_value<std::uint64_t>("seeds", w));
    }
    if (r.seeds.empty()) throw ConfigError("[run " + name + "]: empty seed list");
  } else {
    for (int i = 0; i < reps; ++i) r.seeds.push_back(seed + static_cast<std::uint64_t>(i));
  }
  c.repetitions = static_cast<int>(r.seeds.size());

  std::string arch;
  s.get("vae", arch);
  if (!arch.empty()) {
    VAESpec v;
    v.architecture = arch;
    s.get("vae_pool", v.pool);
    s.get("vae_epochs", v.epochs);
    s.get("vae_batch", v.batch);
    s.get("vae_lr", v.lr);
    s.get("vae_seed", v.seed);
    try {
      vae_architecture(arch);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("[run " + name + "]: " + e.what());
    }
    r.vae = v;
  } else if (uses_vae(c.algorithm)) {
    throw ConfigError("[run " + name + "]: algorithm " + algorithm + " needs 'vae'");
  }

  s.get("solver", r.solver);
  if (r.solver.empty()) r.solver = algorithm_label(c.algorithm);
  s.get("instance", r.instance);
  if (r.instance.empty()) r.instance = name;
  s.reject_unknown();

  try {
    RunConfig probe = c;
    probe.seed = 0;
    probe.latent_bound.reset();
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[run " + name + "]: " + e.what());
  }
  return r;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig cfg;
  std::set<std::string> names;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    }
    if (section == "experiment") {
      detail::Section s("experiment", body);
      s.get("output", cfg.output_dir);
      s.get("cache", cfg.cache_dir);
      s.get("jobs", cfg.jobs);
      s.get("log_y", cfg.log_y);
      s.get("record_timing", cfg.record_timing);
      s.reject_unknown();
      if (cfg.jobs < 1) throw ConfigError("[experiment]: jobs must be >= 1");
    } else if (section.rfind("run ", 0) == 0) {
      const std::string name = detail::trim(section.substr(4));
      if (name.empty() || name.find_first_of("/\\ ") != std::string::npos) {
        throw ConfigError("[" + section + "]: run names must be non-empty without spaces or slashes");
      }
      if (!names.insert(name).second) throw ConfigError("duplicate run '" + name + "'");
      cfg.runs.push_back(detail::parse_run(name, body));
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  return parse_config(is);
}

}  // namespace lsbo::harness
