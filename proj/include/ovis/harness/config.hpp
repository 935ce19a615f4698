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

#ifndef OVIS_HARNESS_CONFIG_HPP
#define OVIS_HARNESS_CONFIG_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <ovis/errors.hpp>
#include <ovis/estimators/spec.hpp>
#include <ovis/harness/anneal.hpp>

namespace ovis {

/// Flat key/value configuration; keys are kept sorted so the hash is canonical.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string{s.substr(b, e - b + 1)};
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!piece.empty()) {
      out.push_back(piece);
    }
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) {
      throw std::invalid_argument("trailing");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + text + "'");
  }
}

inline std::int64_t parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) {
      throw std::invalid_argument("trailing");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an integer, got '" + text + "'");
  }
}

inline const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys{
      "experiment",  "estimators",  "ks",         "n_mc",          "seeds",       "steps",
      "lr",          "batch_size",  "alpha",      "alpha_start",   "alpha_end",   "anneal_steps",
      "alpha_floor", "output_dir",  "threads",    "gamma",         "aux_samples", "dim",
      "n_points",    "noise_scale", "datapoints", "clusters",      "test_size",   "probe_interval",
      "snr_samples", "tvo_points",  "tvo_beta1",  "clip_eps"};
  return keys;
}

}  // namespace detail

/// Built-in settings per experiment (desk scale).
inline ConfigMap default_config(std::string_view experiment) {
  ConfigMap m{{"alpha", "0"},        {"gamma", "0"},       {"aux_samples", "10"}, {"threads", "1"},
              {"output_dir", "results"}, {"seeds", "0"},   {"clip_eps", "1.19e-07"}};
  if (experiment == "asymptotic") {
    m.insert({{"experiment", "asymptotic"},
              {"estimators", "pathwise-iwae,stl,dreg,vimco,ovis-gamma:0,ovis-gamma:1,ovis-mc:10"},
              {"ks", "3,10,30,100,300"},
              {"n_mc", "1000"},
              {"dim", "20"},
              {"n_points", "1024"},
              {"noise_scale", "0.001"},
              {"datapoints", "1"}});
  } else if (experiment == "fit-gaussian") {
    m.insert({{"experiment", "fit-gaussian"},
              {"estimators", "ovis-gamma:0,ovis-gamma:1,vimco,pathwise-iwae,rws-wake-phi,tvo"},
              {"ks", "10"},
              {"steps", "5000"},
              {"lr", "0.001"},
              {"batch_size", "100"},
              {"dim", "20"},
              {"n_points", "1024"},
              {"noise_scale", "1"},
              {"probe_interval", "500"},
              {"snr_samples", "100"},
              {"tvo_points", "5"},
              {"tvo_beta1", "0.001"}});
  } else if (experiment == "gmm-train") {
    m.insert({{"experiment", "gmm-train"},
              {"estimators", "ovis-gamma:1"},
              {"ks", "20"},
              {"steps", "20000"},
              {"lr", "0.001"},
              {"batch_size", "100"},
              {"clusters", "20"},
              {"test_size", "100"},
              {"probe_interval", "1000"},
              {"snr_samples", "500"},
              {"tvo_points", "5"},
              {"tvo_beta1", "0.01"}});
    m["seeds"] = "0,1,2";
  } else {
    throw ConfigError("unknown experiment: " + std::string{experiment});
  }
  return m;
}

/// Reads a flat INI file. Sections are rejected.
inline ConfigMap read_config_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file not found: " + path.string());
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config file " + path.string() + ": " + e.message());
  }
  ConfigMap out;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) {
      throw ConfigError("config file " + path.string() + ": sections are not supported ([" + key + "])");
    }
    out[key] = detail::trim(node.data());
  }
  return out;
}

/// Later entries win.
inline ConfigMap overlay(ConfigMap base, const ConfigMap& top) {
  for (const auto& [k, v] : top) {
    base[k] = v;
  }
  return base;
}

/// FNV-1a over the sorted "key=value\n" lines, as 16 hex digits.
inline std::string config_hash(const ConfigMap& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : config) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// "name" or "name:param" where the parameter is gamma (ovis-gamma) or S (ovis-mc).
/// K is left at 0 and filled in per run.
inline EstimatorSpec parse_estimator_token(std::string_view token, const ConfigMap& config) {
  const auto parts = detail::split_list(token, ':');
  detail::require(!parts.empty() && parts.size() <= 2, "bad estimator token: " + std::string{token});
  auto get = [&config](const std::string& key, const std::string& fallback) {
    const auto it = config.find(key);
    return it == config.end() ? fallback : it->second;
  };
  EstimatorSpec spec;
  spec.kind = parse_estimator_kind(parts[0]);
  spec.K = 0;
  spec.alpha = detail::parse_double("alpha", get("alpha", "0"));
  spec.clip_eps = detail::parse_double("clip_eps", get("clip_eps", "1.19e-07"));
  const std::string param = parts.size() == 2 ? parts[1] : "";
  switch (spec.kind) {
    case EstimatorKind::kOvisGamma:
      spec.gamma = detail::parse_double("gamma", param.empty() ? get("gamma", "0") : param);
      break;
    case EstimatorKind::kOvisMc:
      spec.S = static_cast<int>(detail::parse_int("aux_samples", param.empty() ? get("aux_samples", "10") : param));
      break;
    case EstimatorKind::kTvo:
      spec.tvo_partition =
          tvo_log_uniform_partition(static_cast<int>(detail::parse_int("tvo_points", get("tvo_points", "5"))),
                                    detail::parse_double("tvo_beta1", get("tvo_beta1", "0.01")));
      break;
    default:
      detail::require(param.empty(), "estimator " + parts[0] + " takes no parameter");
  }
  return spec;
}

/// Estimator label for output rows, e.g. "ovis-gamma".
inline std::string estimator_label(const EstimatorSpec& spec) { return std::string{to_string(spec.kind)}; }

struct ExperimentConfig {
  std::string experiment;
  std::vector<EstimatorSpec> estimators;
  std::vector<int> ks;
  int n_mc{1000};
  std::vector<std::uint64_t> seeds;
  int steps{0};
  double lr{1e-3};
  int batch_size{100};
  std::optional<AlphaSchedule> alpha_schedule;
  std::string output_dir{"results"};
  int threads{1};
  int dim{20};
  int n_points{1024};
  double noise_scale{1e-3};
  int datapoints{1};
  int clusters{20};
  int test_size{100};
  int probe_interval{1000};
  int snr_samples{500};
  /// The resolved key/value map and its hash, embedded in every output.
  ConfigMap raw;
  std::string hash;
};

inline ExperimentConfig parse_experiment_config(const ConfigMap& config) {
  for (const auto& [k, v] : config) {
    if (!detail::known_keys().contains(k)) {
      throw ConfigError("unknown config key: " + k);
    }
  }
  auto get = [&config](const std::string& key) -> std::optional<std::string> {
    const auto it = config.find(key);
    if (it == config.end() || it->second.empty()) {
      return std::nullopt;
    }
    return it->second;
  };
  auto get_int = [&](const std::string& key, int fallback) {
    const auto v = get(key);
    return v ? static_cast<int>(detail::parse_int(key, *v)) : fallback;
  };
  auto get_double = [&](const std::string& key, double fallback) {
    const auto v = get(key);
    return v ? detail::parse_double(key, *v) : fallback;
  };

  ExperimentConfig c;
  c.raw = config;
  c.hash = config_hash(config);
  c.experiment = get("experiment").value_or("");
  if (c.experiment != "asymptotic" && c.experiment != "fit-gaussian" && c.experiment != "gmm-train") {
    throw ConfigError("config: experiment must be asymptotic, fit-gaussian or gmm-train");
  }
  for (const auto& token : detail::split_list(get("estimators").value_or(""))) {
    try {
      c.estimators.push_back(parse_estimator_token(token, config));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string{"config: "} + e.what());
    }
  }
  if (c.estimators.empty()) {
    throw ConfigError("config: estimators must not be empty");
  }
  for (const auto& k : detail::split_list(get("ks").value_or(""))) {
    c.ks.push_back(static_cast<int>(detail::parse_int("ks", k)));
    if (c.ks.back() < 1) {
      throw ConfigError("config: every K must be positive");
    }
  }
  if (c.ks.empty()) {
    throw ConfigError("config: ks must not be empty");
  }
  for (const auto& s : detail::split_list(get("seeds").value_or(""))) {
    const auto v = detail::parse_int("seeds", s);
    if (v < 0) {
      throw ConfigError("config: seeds must be non-negative");
    }
    c.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (c.seeds.empty()) {
    throw ConfigError("config: seeds must not be empty");
  }
  c.n_mc = get_int("n_mc", c.n_mc);
  c.steps = get_int("steps", c.steps);
  c.lr = get_double("lr", c.lr);
  c.batch_size = get_int("batch_size", c.batch_size);
  c.output_dir = get("output_dir").value_or(c.output_dir);
  c.threads = get_int("threads", c.threads);
  c.dim = get_int("dim", c.dim);
  c.n_points = get_int("n_points", c.n_points);
  c.noise_scale = get_double("noise_scale", c.noise_scale);
  c.datapoints = get_int("datapoints", c.datapoints);
  c.clusters = get_int("clusters", c.clusters);
  c.test_size = get_int("test_size", c.test_size);
  c.probe_interval = get_int("probe_interval", c.probe_interval);
  c.snr_samples = get_int("snr_samples", c.snr_samples);
  if (get("alpha_start")) {
    AlphaSchedule s;
    s.start = get_double("alpha_start", s.start);
    s.end = get_double("alpha_end", s.end);
    s.anneal_steps = get_int("anneal_steps", s.anneal_steps);
    s.floor = get_double("alpha_floor", s.floor);
    try {
      s.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string{"config: "} + e.what());
    }
    c.alpha_schedule = s;
  }
  if (c.n_mc < 2 && c.experiment == "asymptotic") {
    throw ConfigError("config: n_mc must be at least 2");
  }
  if (c.steps < 0 || c.batch_size < 1 || c.threads < 1 || c.probe_interval < 1 || c.snr_samples < 0 ||
      c.datapoints < 1 || c.test_size < 1) {
    throw ConfigError("config: steps, batch_size, threads, probe_interval, snr_samples, datapoints or test_size "
                      "out of range");
  }
  for (const auto& spec : c.estimators) {
    for (int k : c.ks) {
      auto probe = spec;
      probe.K = k;
      try {
        probe.validate();
      } catch (const Error& e) {
        throw ConfigError("config: " + estimator_label(spec) + " with K=" + std::to_string(k) + ": " + e.what());
      }
    }
  }
  return c;
}

}  // namespace ovis

#endif  // OVIS_HARNESS_CONFIG_HPP
