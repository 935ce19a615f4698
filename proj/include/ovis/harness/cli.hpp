// Copyright 2026 The OVIS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OVIS_HARNESS_CLI_HPP
#define OVIS_HARNESS_CLI_HPP

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <ovis/errors.hpp>
#include <ovis/harness/config.hpp>
#include <ovis/harness/experiments.hpp>
#include <ovis/harness/selftest.hpp>

namespace ovis {

namespace detail {

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> ks;
  std::optional<std::string> estimator;
  std::optional<int> n_mc;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<int> aux_samples;
  std::optional<int> threads;
  std::optional<int> steps;
};

inline void add_overrides(CLI::App& cmd, CliOverrides& o) {
  cmd.add_option("--config", o.config_path, "flat key = value configuration file");
  cmd.add_option("--seed", o.seed, "random seed (replaces the seed list)");
  cmd.add_option("--out", o.out, "output directory");
  cmd.add_option("--k", o.ks, "particle counts, comma separated");
  cmd.add_option("--estimator", o.estimator, "estimators, comma separated (e.g. ovis-gamma, vimco, ovis-mc:10)");
  cmd.add_option("--n-mc", o.n_mc, "Monte Carlo replicates for gradient statistics");
  cmd.add_option("--gamma", o.gamma, "gamma for ovis-gamma");
  cmd.add_option("--alpha", o.alpha, "Renyi alpha in [0, 1]");
  cmd.add_option("--aux-samples", o.aux_samples, "auxiliary samples S for ovis-mc");
  cmd.add_option("--threads", o.threads, "worker threads for replicate evaluation");
  cmd.add_option("--steps", o.steps, "training steps");
}

inline ConfigMap resolve_config(const std::string& experiment, const CliOverrides& o) {
  auto config = default_config(experiment);
  if (!o.config_path.empty()) {
    config = overlay(config, read_config_file(o.config_path));
    if (config.at("experiment") != experiment) {
      throw ConfigError("config file " + o.config_path + " is for experiment '" + config.at("experiment") +
                        "', not '" + experiment + "'");
    }
  }
  auto set = [&config](const std::string& key, const auto& value) {
    if (value) {
      if constexpr (std::is_same_v<std::decay_t<decltype(*value)>, std::string>) {
        config[key] = *value;
      } else {
        config[key] = format_number(*value);
      }
    }
  };
  set("seeds", o.seed);
  set("output_dir", o.out);
  set("ks", o.ks);
  set("estimators", o.estimator);
  set("n_mc", o.n_mc);
  set("gamma", o.gamma);
  set("alpha", o.alpha);
  set("aux_samples", o.aux_samples);
  set("threads", o.threads);
  set("steps", o.steps);
  return config;
}

}  // namespace detail

/// Exit codes: 0 success, 1 failed selftest or runtime failure, 2 usage or configuration error.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Gradient estimators for importance weighted variational bounds"};
  app.require_subcommand(1);
  detail::CliOverrides asym_opts;
  detail::CliOverrides fit_opts;
  detail::CliOverrides gmm_opts;
  auto* asym = app.add_subcommand("asymptotic", "SNR and variance versus K on the Gaussian toy model");
  auto* fit = app.add_subcommand("fit-gaussian", "train the Gaussian toy model");
  auto* gmm = app.add_subcommand("gmm-train", "train the Gaussian mixture model");
  auto* self = app.add_subcommand("selftest", "unbiasedness checks against exact enumeration");
  detail::add_overrides(*asym, asym_opts);
  detail::add_overrides(*fit, fit_opts);
  detail::add_overrides(*gmm, gmm_opts);
  SelftestOptions self_opts;
  self->add_option("--n-mc", self_opts.n_mc, "replicates per estimator");
  self->add_option("--seed", self_opts.seed, "random seed");
  self->add_option("--threads", self_opts.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (self->parsed()) {
      const bool ok = run_selftest(std::cout, self_opts);
      std::cout << (ok ? "selftest passed" : "selftest FAILED") << '\n';
      return ok ? 0 : 1;
    }
    auto run = [](const std::string& name, const detail::CliOverrides& o) {
      const auto config = parse_experiment_config(detail::resolve_config(name, o));
      std::cerr << name << ": config " << config.hash << ", writing to " << config.output_dir << '\n';
      if (name == "asymptotic") {
        run_asymptotic(config);
      } else if (name == "fit-gaussian") {
        run_fit_gaussian(config);
      } else {
        run_gmm_train(config);
      }
    };
    if (asym->parsed()) {
      run("asymptotic", asym_opts);
    } else if (fit->parsed()) {
      run("fit-gaussian", fit_opts);
    } else {
      run("gmm-train", gmm_opts);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CapabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Unsupported& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ovis

#endif  // OVIS_HARNESS_CLI_HPP
