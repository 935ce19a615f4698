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

#ifndef OVIS_ESTIMATORS_TVO_HPP
#define OVIS_ESTIMATORS_TVO_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/estimators/estimate.hpp>
#include <ovis/estimators/spec.hpp>
#include <ovis/models/model.hpp>
#include <ovis/rng.hpp>
#include <ovis/weights.hpp>

namespace ovis {

namespace detail {

// Normalized w^beta.
inline std::vector<double> snis_weights(std::span<const double> log_w, double beta) {
  std::vector<double> t(log_w.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = beta * log_w[k];
  }
  const double total = log_sum_exp(t);
  for (double& v : t) {
    v = std::exp(v - total);
  }
  return t;
}

}  // namespace detail

/// SNIS estimate of E_{pi_beta}[log w] with pi_beta proportional to q w^beta.
inline double tvo_stratum_mean(std::span<const double> log_w, double beta) {
  const auto v = detail::snis_weights(log_w, beta);
  double mean = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    mean += v[k] * log_w[k];
  }
  return mean;
}

/// Per-particle score coefficients of the left-Riemann TVO gradient. Each stratum
/// contributes (beta_{p+1} - beta_p) * (-E_pi[h] + (1 - beta_p) Cov_pi[h, log w]),
/// the covariance using the SNIS weights with a reliability-weights correction.
inline std::vector<double> tvo_coefficients(std::span<const double> log_w, std::span<const double> partition) {
  const std::size_t n = log_w.size();
  std::vector<double> coefs(n, 0.0);
  for (std::size_t p = 0; p + 1 < partition.size(); ++p) {
    const double beta = partition[p];
    const double width = partition[p + 1] - beta;
    const auto v = detail::snis_weights(log_w, beta);
    double f_bar = 0.0;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      f_bar += v[k] * log_w[k];
      sum_sq += v[k] * v[k];
    }
    const double denom = 1.0 - sum_sq;
    const double cov_scale = denom > 1e-12 ? (1.0 - beta) / denom : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      coefs[k] += width * (-v[k] + cov_scale * v[k] * (log_w[k] - f_bar));
    }
  }
  return coefs;
}

/// Thermodynamic variational objective gradient, K particles shared across strata.
template <ScoreModel M>
GradientEstimate tvo_gradient(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                              RandomStream& rng) {
  if (!model.capabilities().has_score) {
    throw CapabilityError("tvo: model has no analytic score");
  }
  detail::require(spec.K >= 2, "tvo: needs K >= 2");
  detail::require(spec.tvo_partition.size() >= 2, "tvo: partition needs at least two points");
  for (std::size_t i = 0; i < spec.tvo_partition.size(); ++i) {
    const double b = spec.tvo_partition[i];
    detail::require(b >= 0.0 && b <= 1.0, "tvo: partition values must lie in [0, 1]");
    detail::require(i == 0 || b > spec.tvo_partition[i - 1], "tvo: partition must be strictly increasing");
  }
  const auto p = detail::draw_particles(model, x, spec.K, rng);
  const WeightSet ws{p.log_w, spec.alpha};
  const auto coefs = tvo_coefficients(p.log_w, spec.tvo_partition);
  GradientEstimate est;
  const std::span<const typename M::latent_type> zs{p.z};
  est.phi_grad = detail::combine_scores(model, x, zs, coefs);
  est.theta_grad = detail::theta_from_weights(model, x, zs, ws);
  est.aux = detail::aux_from(ws);
  return est;
}

}  // namespace ovis

#endif  // OVIS_ESTIMATORS_TVO_HPP
