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

// lsbo command-line front end. Exit codes: 0 ok, 1 config error, 2 runtime error.

#include "lsbo/harness/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace lsbo::harness;
  CLI::App app{"latent-space Bayesian optimization experiments"};
  app.require_subcommand(1);

  std::string config_path, dir, output;
  int jobs = 0;
  bool no_train = false;
  bool linear_y = false;
  std::vector<double> taus{0.1, 0.001};
  int n_g = 50;

  auto* run = app.add_subcommand("run", "run every [run ...] section of a config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--jobs,-j", jobs, "worker threads (default: config value)");
  run->add_option("--output,-o", output, "results directory (default: config value)");
  run->add_flag("--no-train", no_train, "fail instead of training missing VAE checkpoints");

  auto* agg = app.add_subcommand("aggregate", "write <run>/aggregate.csv for each run");
  agg->add_option("dir", dir, "results directory")->required();

  auto* plot = app.add_subcommand("plot", "write plots/<instance>.svg");
  plot->add_option("dir", dir, "results directory")->required();
  plot->add_flag("--linear", linear_y, "linear y axis");

  auto* prof = app.add_subcommand("profile", "performance/data profiles and solved table");
  prof->add_option("dir", dir, "results directory")->required();
  prof->add_option("--tau", taus, "accuracy levels")->expected(1, -1);
  prof->add_option("--ng", n_g, "data-profile budget in simplex gradients");

  auto* tv = app.add_subcommand("train-vae", "pre-train and cache the VAEs a config uses");
  tv->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const ExperimentConfig cfg = load_config(config_path);
      RunOptions opt;
      opt.jobs = jobs;
      opt.allow_train = !no_train;
      opt.output_dir = output;
      const auto out = run_experiment(cfg, read_file(config_path), opt);
      std::cout << out.string() << "\n";
    } else if (*agg) {
      write_aggregates(dir);
    } else if (*plot) {
      write_plots(dir, !linear_y);
    } else if (*prof) {
      for (double t : taus) {
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("--tau values must lie in (0, 1)");
      }
      if (n_g < 1) throw ConfigError("--ng must be positive");
      write_profiles(dir, taus, n_g);
    } else if (*tv) {
      train_vaes(load_config(config_path), std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
