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

#ifndef OVIS_HARNESS_EXPERIMENTS_HPP
#define OVIS_HARNESS_EXPERIMENTS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <ovis/adam.hpp>
#include <ovis/diagnostics/posterior.hpp>
#include <ovis/diagnostics/stats.hpp>
#include <ovis/errors.hpp>
#include <ovis/estimators/dispatch.hpp>
#include <ovis/harness/anneal.hpp>
#include <ovis/harness/config.hpp>
#include <ovis/harness/csv.hpp>
#include <ovis/models/gaussian.hpp>
#include <ovis/models/gmm.hpp>
#include <ovis/parameters.hpp>
#include <ovis/rng.hpp>

namespace ovis {

namespace detail {

inline constexpr std::uint64_t kBatchStream = 0x62617463ULL;
inline constexpr std::uint64_t kEstimatorStream = 0x65737469ULL;
inline constexpr std::uint64_t kTestStream = 0x74657374ULL;
inline constexpr std::uint64_t kProbeStream = 0x70726f62ULL;

inline std::string optional_gamma(const EstimatorSpec& spec) { return spec.gamma ? format_number(*spec.gamma) : ""; }
inline std::string optional_s(const EstimatorSpec& spec) { return spec.S ? format_number(*spec.S) : ""; }

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out{dir / name, std::ios::binary};
  if (!out) {
    throw Error("cannot open output file " + (dir / name).string());
  }
  return out;
}

// FNV-1a of the checkpoint bytes of phi and theta.
inline std::string parameter_hash(const ParameterVector& phi, const ParameterVector& theta) {
  std::ostringstream bytes;
  write_checkpoint(bytes, phi);
  write_checkpoint(bytes, theta);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline double alpha_at(const ExperimentConfig& config, const EstimatorSpec& spec, int step) {
  return config.alpha_schedule ? anneal_alpha(step, *config.alpha_schedule) : spec.alpha;
}

// Estimators whose alpha must stay 0 are left alone by the schedule.
inline bool accepts_alpha(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kVimcoArith:
    case EstimatorKind::kVimcoGeom:
    case EstimatorKind::kRwsSleepPhi:
    case EstimatorKind::kTvo:
    case EstimatorKind::kStl:
    case EstimatorKind::kDreg:
      return false;
    default:
      return true;
  }
}

inline void write_metadata(const std::filesystem::path& dir, const std::string& name, const ExperimentConfig& config,
                           const nlohmann::json& runs, double wall_seconds) {
  nlohmann::json meta;
  meta["experiment"] = config.experiment;
  meta["config_hash"] = config.hash;
  meta["config"] = config.raw;
  meta["alpha_floor"] = config.alpha_schedule ? config.alpha_schedule->floor : 0.0;
  meta["dsnr"] = "first half of the replicates fixes the mean direction, second half measures SNR along it";
  meta["runs"] = runs;
  meta["wall_seconds"] = wall_seconds;
  auto out = open_output(dir, name);
  out << meta.dump(2) << '\n';
}

// Mean of sum_k v_k grad_theta log w_k over a batch, for estimators that produce no theta-gradient.
template <ScoreModel M>
std::vector<double> wake_theta_batch(const M& model, std::span<const typename M::observation_type> xs, int K,
                                     double alpha, RandomStream& rng) {
  std::vector<double> g(model.theta().size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto child = rng.split(i);
    const auto p = draw_particles(model, xs[i], K, child);
    const WeightSet ws{p.log_w, alpha};
    const auto one = theta_from_weights(model, xs[i], std::span<const typename M::latent_type>{p.z}, ws);
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] += one[j] / static_cast<double>(xs.size());
    }
  }
  return g;
}

// One ascent step on phi and theta. Returns the batch estimate for logging.
template <ScoreModel M>
GradientEstimate train_step(M& model, std::span<const typename M::observation_type> batch, const EstimatorSpec& spec,
                            RandomStream& rng, AdamState& phi_opt, AdamState& theta_opt) {
  auto est = estimate_batch(model, batch, spec, rng);
  std::vector<double> theta_grad;
  if (est.theta_grad) {
    theta_grad = *est.theta_grad;
  } else {
    auto wake = rng.split(0x7468657461ULL);
    theta_grad = wake_theta_batch(model, batch, spec.K, 0.0, wake);
  }
  adam_step(model.phi().values(), est.phi_grad, phi_opt);
  adam_step(model.theta().values(), theta_grad, theta_opt);
  return est;
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(s);
}

}  // namespace detail

/// One row of the asymptotic study.
struct AsymptoticRow {
  EstimatorSpec spec;
  std::string segment;
  SegmentSummary summary;
  int n_mc{0};
  std::uint64_t seed{0};
};

/// Gradient statistics on the Gaussian toy model for every estimator x K x seed,
/// reported for the phi segment "b" and the theta segment "mu".
inline std::vector<AsymptoticRow> asymptotic_study(const ExperimentConfig& config) {
  std::vector<AsymptoticRow> rows;
  for (const auto seed : config.seeds) {
    const auto setup = gaussian_make(config.dim, config.n_points, config.noise_scale, seed);
    detail::require(config.datapoints <= static_cast<int>(setup.dataset.size()),
                    "asymptotic: datapoints exceeds the dataset size");
    const std::span<const std::vector<double>> xs{setup.dataset.data(), static_cast<std::size_t>(config.datapoints)};
    for (const auto& base : config.estimators) {
      if (base.kind == EstimatorKind::kExactOcv) {
        throw CapabilityError("asymptotic: exact-ocv needs an enumerable latent space");
      }
      for (int k : config.ks) {
        auto spec = base;
        spec.K = k;
        const auto stats = xs.size() == 1
                               ? gradient_stats(setup.model, xs[0], spec, config.n_mc, seed, config.threads)
                               : gradient_stats_batch(setup.model, xs, spec, config.n_mc, seed, config.threads);
        rows.push_back({spec, "b", stats.phi.segment("b"), config.n_mc, seed});
        if (stats.theta) {
          rows.push_back({spec, "mu", stats.theta->segment("mu"), config.n_mc, seed});
        }
      }
    }
  }
  return rows;
}

inline void write_asymptotic_csv(std::ostream& out, const ExperimentConfig& config,
                                 const std::vector<AsymptoticRow>& rows) {
  CsvWriter csv{out, {"config_hash", "estimator", "K", "alpha", "gamma", "S", "segment", "avg_snr", "dsnr",
                      "avg_variance", "avg_abs_mean", "n_mc", "seed"}};
  for (const auto& r : rows) {
    csv.row({config.hash, estimator_label(r.spec), format_number(r.spec.K), format_number(r.spec.alpha),
             detail::optional_gamma(r.spec), detail::optional_s(r.spec), r.segment, format_number(r.summary.avg_snr),
             format_number(r.summary.dsnr), format_number(r.summary.avg_variance),
             format_number(r.summary.avg_abs_mean), format_number(r.n_mc), format_number(r.seed)});
  }
}

/// Runs the study and writes asymptotic.csv plus metadata into config.output_dir.
inline std::vector<AsymptoticRow> run_asymptotic(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = asymptotic_study(config);
  const std::filesystem::path dir{config.output_dir};
  {
    auto out = detail::open_output(dir, "asymptotic.csv");
    write_asymptotic_csv(out, config, rows);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail::write_metadata(dir, "asymptotic.meta.json", config, nlohmann::json::array(), wall);
  return rows;
}

/// Metrics logged during training.
struct TrainingRow {
  std::string estimator;
  EstimatorSpec spec;
  std::uint64_t seed{0};
  int step{0};
  double alpha{0.0};
  double bound{0.0};
  double ess{0.0};
  /// fit-gaussian: |A - A*|, |b - b*|, |mu - mu_hat|; gmm-train: posterior L2, parameter L2.
  std::vector<double> metrics;
  double avg_snr_phi{std::numeric_limits<double>::quiet_NaN()};
  double avg_variance_phi{std::numeric_limits<double>::quiet_NaN()};
  std::string status{"ok"};
};

struct TrainingRun {
  EstimatorSpec spec;
  std::uint64_t seed{0};
  std::vector<TrainingRow> rows;
  std::optional<int> failed_step;
  std::string parameter_hash;
};

namespace detail {

inline std::vector<int> probe_steps(int steps, int interval) {
  std::vector<int> out;
  for (int s = 0; s < steps; s += interval) {
    out.push_back(s);
  }
  out.push_back(steps);
  return out;
}

// Generic training loop. `draw_batch(step)` gives the batch, `metrics(model, row)` fills the
// model-specific columns.
template <ScoreModel M, class DrawBatch, class Metrics>
TrainingRun train(M model, const ExperimentConfig& config, EstimatorSpec spec, std::uint64_t seed,
                  DrawBatch draw_batch, Metrics metrics) {
  TrainingRun run;
  run.spec = spec;
  run.seed = seed;
  AdamState phi_opt{model.phi().size(), config.lr};
  AdamState theta_opt{model.theta().size(), config.lr};
  const RandomStream estimator_root{seed, kEstimatorStream};
  const auto probes = probe_steps(config.steps, config.probe_interval);
  std::size_t next_probe = 0;
  GradientEstimate last;

  auto log_row = [&](int step, double alpha, const std::vector<typename M::observation_type>& batch) {
    TrainingRow row;
    row.estimator = estimator_label(spec);
    row.spec = spec;
    row.seed = seed;
    row.step = step;
    row.alpha = alpha;
    row.bound = last.aux.bound;
    row.ess = last.aux.ess;
    metrics(model, row);
    if (config.snr_samples >= 2) {
      auto probe_spec = spec;
      probe_spec.alpha = alpha;
      const auto stats = gradient_stats_batch(model, std::span<const typename M::observation_type>{batch}, probe_spec,
                                              config.snr_samples, seed ^ kProbeStream, config.threads);
      row.avg_snr_phi = stats.phi.avg_snr;
      row.avg_variance_phi = stats.phi.avg_variance;
    }
    run.rows.push_back(row);
  };

  for (int step = 0; step <= config.steps; ++step) {
    const double alpha = accepts_alpha(spec.kind) ? alpha_at(config, spec, step) : spec.alpha;
    auto step_spec = spec;
    step_spec.alpha = alpha;
    const auto batch = draw_batch(step);
    if (step == 0 || (next_probe < probes.size() && probes[next_probe] == step)) {
      if (step == 0) {
        auto rng = estimator_root.split(0xffffffffULL);
        last = estimate_batch(model, std::span<const typename M::observation_type>{batch}, step_spec, rng);
      }
      log_row(step, alpha, batch);
      while (next_probe < probes.size() && probes[next_probe] <= step) {
        ++next_probe;
      }
    }
    if (step == config.steps) {
      break;
    }
    try {
      auto rng = estimator_root.split(static_cast<std::uint64_t>(step));
      last = train_step(model, std::span<const typename M::observation_type>{batch}, step_spec, rng, phi_opt,
                        theta_opt);
    } catch (const NonFiniteError&) {
      run.failed_step = step;
      TrainingRow row;
      row.estimator = estimator_label(spec);
      row.spec = spec;
      row.seed = seed;
      row.step = step;
      row.alpha = alpha;
      row.status = "failed";
      run.rows.push_back(row);
      break;
    }
  }
  run.parameter_hash = parameter_hash(model.phi(), model.theta());
  return run;
}

inline void write_training_csv(std::ostream& out, const ExperimentConfig& config, const std::vector<TrainingRun>& runs,
                               const std::vector<std::string>& metric_names) {
  std::vector<std::string> header{"config_hash", "estimator", "K",     "alpha", "gamma", "S",
                                  "seed",        "step",      "alpha_t", "bound", "ess"};
  header.insert(header.end(), metric_names.begin(), metric_names.end());
  header.insert(header.end(), {"avg_snr_phi", "avg_variance_phi", "status"});
  CsvWriter csv{out, header};
  for (const auto& run : runs) {
    for (const auto& r : run.rows) {
      std::vector<std::string> fields{config.hash,
                                      r.estimator,
                                      format_number(r.spec.K),
                                      format_number(r.spec.alpha),
                                      detail::optional_gamma(r.spec),
                                      detail::optional_s(r.spec),
                                      format_number(r.seed),
                                      format_number(r.step),
                                      format_number(r.alpha),
                                      format_number(r.bound),
                                      format_number(r.ess)};
      for (std::size_t i = 0; i < metric_names.size(); ++i) {
        fields.push_back(i < r.metrics.size() ? format_number(r.metrics[i]) : "");
      }
      fields.insert(fields.end(),
                    {format_number(r.avg_snr_phi), format_number(r.avg_variance_phi), r.status});
      csv.row(fields);
    }
  }
}

inline nlohmann::json runs_metadata(const std::vector<TrainingRun>& runs) {
  auto arr = nlohmann::json::array();
  for (const auto& run : runs) {
    nlohmann::json j;
    j["estimator"] = estimator_label(run.spec);
    j["K"] = run.spec.K;
    j["seed"] = run.seed;
    j["parameter_hash"] = run.parameter_hash;
    j["failed_step"] = run.failed_step ? nlohmann::json(*run.failed_step) : nlohmann::json(nullptr);
    arr.push_back(j);
  }
  return arr;
}

}  // namespace detail

/// Trains A, b and mu of the Gaussian toy model; minibatches are drawn from the fixed dataset.
inline std::vector<TrainingRun> fit_gaussian_study(const ExperimentConfig& config) {
  std::vector<TrainingRun> runs;
  for (const auto seed : config.seeds) {
    const auto setup = gaussian_make(config.dim, config.n_points, config.noise_scale, seed);
    const RandomStream batch_root{seed, detail::kBatchStream};
    auto draw_batch = [&](int step) {
      auto rng = batch_root.split(static_cast<std::uint64_t>(step));
      std::vector<std::vector<double>> batch;
      batch.reserve(static_cast<std::size_t>(config.batch_size));
      const auto n = setup.dataset.size();
      for (int i = 0; i < config.batch_size; ++i) {
        batch.push_back(setup.dataset[static_cast<std::size_t>(rng() % n)]);
      }
      return batch;
    };
    auto metrics = [&setup](const GaussianToyModel& model, TrainingRow& row) {
      row.metrics = {detail::l2_distance(model.matrix_a(), setup.a_star),
                     detail::l2_distance(model.offset_b(), setup.b_star),
                     detail::l2_distance(model.mu(), setup.mu_hat)};
    };
    for (const auto& base : config.estimators) {
      for (int k : config.ks) {
        auto spec = base;
        spec.K = k;
        runs.push_back(detail::train(setup.model, config, spec, seed, draw_batch, metrics));
      }
    }
  }
  return runs;
}

inline std::vector<TrainingRun> run_fit_gaussian(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = fit_gaussian_study(config);
  const std::filesystem::path dir{config.output_dir};
  {
    auto out = detail::open_output(dir, "fit_gaussian.csv");
    detail::write_training_csv(out, config, runs, {"l2_a", "l2_b", "l2_mu"});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail::write_metadata(dir, "fit_gaussian.meta.json", config, detail::runs_metadata(runs), wall);
  return runs;
}

/// Trains the GMM from a uniform prior (theta = 0) on fresh draws from the true model,
/// evaluating against a held-out test set.
inline std::vector<TrainingRun> gmm_train_study(const ExperimentConfig& config) {
  std::vector<TrainingRun> runs;
  const auto theta_star = gmm_true_logits(config.clusters);
  for (const auto seed : config.seeds) {
    auto truth = gmm_make(config.clusters, seed);
    auto initial = truth;
    std::fill(initial.theta().values().begin(), initial.theta().values().end(), 0.0);

    RandomStream test_rng{seed, detail::kTestStream};
    std::vector<double> test_xs;
    for (int m = 0; m < config.test_size; ++m) {
      test_xs.push_back(truth.sample_joint(test_rng).first);
    }
    const RandomStream batch_root{seed, detail::kBatchStream};
    auto draw_batch = [&](int step) {
      auto rng = batch_root.split(static_cast<std::uint64_t>(step));
      std::vector<double> batch;
      batch.reserve(static_cast<std::size_t>(config.batch_size));
      for (int i = 0; i < config.batch_size; ++i) {
        batch.push_back(truth.sample_joint(rng).first);
      }
      return batch;
    };
    auto metrics = [&](const GmmModel& model, TrainingRow& row) {
      const auto m = posterior_l2(model, theta_star, std::span<const double>{test_xs});
      row.metrics = {m.posterior_l2, m.parameter_l2};
    };
    for (const auto& base : config.estimators) {
      for (int k : config.ks) {
        auto spec = base;
        spec.K = k;
        runs.push_back(detail::train(initial, config, spec, seed, draw_batch, metrics));
      }
    }
  }
  return runs;
}

inline std::vector<TrainingRun> run_gmm_train(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = gmm_train_study(config);
  const std::filesystem::path dir{config.output_dir};
  {
    auto out = detail::open_output(dir, "gmm_train.csv");
    detail::write_training_csv(out, config, runs, {"posterior_l2", "parameter_l2"});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail::write_metadata(dir, "gmm_train.meta.json", config, detail::runs_metadata(runs), wall);
  return runs;
}

}  // namespace ovis

#endif  // OVIS_HARNESS_EXPERIMENTS_HPP
