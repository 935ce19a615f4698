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

#ifndef OVIS_ESTIMATORS_SCORE_FUNCTION_HPP
#define OVIS_ESTIMATORS_SCORE_FUNCTION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/estimators/estimate.hpp>
#include <ovis/estimators/spec.hpp>
#include <ovis/models/model.hpp>
#include <ovis/rng.hpp>
#include <ovis/weights.hpp>

/**
 * \file
 * \brief Score-function estimators g = sum_k (d_k - c_k) h_k.
 *
 * The control-variate functions below take only weights, so every c_k can be
 * checked for legality: entry k never reads w_k (except where the estimator is
 * knowingly biased, as for ovis-gamma with gamma > 0).
 */

namespace ovis {

namespace detail {

template <ScoreModel M>
void require_score(const M& model, std::string_view who) {
  if (!model.capabilities().has_score) {
    throw CapabilityError(std::string{who} + ": model has no analytic score");
  }
}

template <ScoreModel M>
GradientEstimate assemble(const M& model, const typename M::observation_type& x, const Particles<M>& p,
                          const WeightSet& ws, std::span<const double> prefactors, std::vector<double> controls) {
  GradientEstimate est;
  est.phi_grad = combine_scores(model, x, std::span<const typename M::latent_type>{p.z}, prefactors);
  est.theta_grad = theta_from_weights(model, x, std::span<const typename M::latent_type>{p.z}, ws);
  est.aux = aux_from(ws);
  est.aux.controls = std::move(controls);
  return est;
}

}  // namespace detail

/// VIMCO controls c_k = log Z^_[-k] (arithmetic or geometric replacement of w_k).
inline std::vector<double> vimco_controls(const WeightSet& ws, bool geometric) {
  if (ws.alpha() != 0.0) {
    throw Unsupported("vimco: only alpha = 0 is implemented");
  }
  auto loo = leave_one_out(ws);
  return geometric ? std::move(loo.log_z_hat_geom) : std::move(loo.log_z_hat_arith);
}

/// OVIS-MC controls c_k = (1/S) sum_s d_k(z^(s), z_{-k}): the auxiliary weight
/// replaces w_k inside Z_K and v_k. The S auxiliary weights are shared by all k.
inline std::vector<double> ovis_mc_controls(const WeightSet& ws, std::span<const double> aux_log_w) {
  detail::require(!aux_log_w.empty(), "ovis-mc: need at least one auxiliary sample");
  const std::size_t n = ws.size();
  const double k_count = static_cast<double>(n);
  const double inv_s = 1.0 / static_cast<double>(aux_log_w.size());
  std::vector<double> controls(n, 0.0);

  if (ws.is_elbo_limit()) {
    // d_k = mean(log w) - 1/K with log w_k replaced.
    const auto rest = detail::leave_one_out_sum(ws.log_weights());
    const double aux_mean = std::accumulate(aux_log_w.begin(), aux_log_w.end(), 0.0) * inv_s;
    for (std::size_t k = 0; k < n; ++k) {
      controls[k] = (rest[k] + aux_mean) / k_count - 1.0 / k_count;
    }
    return controls;
  }

  const double scale = 1.0 - ws.alpha();
  const double log_k = std::log(k_count);
  const auto rest = detail::leave_one_out_log_sum_exp(ws.tempered_log_weights());
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (double lw : aux_log_w) {
      const double t = scale * lw;
      const double total = log_add_exp(rest[k], t);
      acc += (total - log_k) / scale - std::exp(t - total);
    }
    controls[k] = acc * inv_s;
  }
  return controls;
}

/// Unclipped OVIS-gamma controls
/// c_k = (1-alpha)^-1 log (1/(K-1)) sum_{l != k} w_l^(1-alpha) - gamma v_k + (1-gamma) log(1 - 1/K).
inline std::vector<double> ovis_gamma_controls(const WeightSet& ws, double gamma) {
  const std::size_t n = ws.size();
  detail::require(n >= 2, "ovis-gamma: needs K >= 2");
  const double k_count = static_cast<double>(n);
  const double tail = (1.0 - gamma) * std::log1p(-1.0 / k_count);
  std::vector<double> controls(n);
  if (ws.is_elbo_limit()) {
    const auto rest = detail::leave_one_out_sum(ws.log_weights());
    for (std::size_t k = 0; k < n; ++k) {
      controls[k] = rest[k] / (k_count - 1.0) - gamma / k_count + tail;
    }
    return controls;
  }
  const double scale = 1.0 - ws.alpha();
  const auto rest = detail::leave_one_out_log_sum_exp(ws.tempered_log_weights());
  for (std::size_t k = 0; k < n; ++k) {
    controls[k] = (rest[k] - std::log(k_count - 1.0)) / scale - gamma * ws.normalized(k) + tail;
  }
  return controls;
}

/// OVIS-gamma prefactors d_k - c_k through the factorization
/// log Z_K - log (1/(K-1)) sum_{l != k} w_l = log((1 - 1/K) / (1 - v_k)),
/// with v_k clipped to at most 1 - clip_eps (clip_eps = 0 disables clipping).
inline std::vector<double> ovis_gamma_prefactors(const WeightSet& ws, double gamma, double clip_eps) {
  const std::size_t n = ws.size();
  detail::require(n >= 2, "ovis-gamma: needs K >= 2");
  detail::require(gamma >= 0.0 && gamma <= 1.0, "ovis-gamma: gamma must lie in [0, 1]");
  const double k_count = static_cast<double>(n);
  const double log_keep = std::log1p(-1.0 / k_count);
  std::vector<double> out(n);

  if (ws.is_elbo_limit()) {
    // (1-alpha)^-1 log((1-1/K)/(1-v_k)) -> (log w_k - mean log w) / (K - 1) as alpha -> 1.
    const auto lw = ws.log_weights();
    const double mean = std::accumulate(lw.begin(), lw.end(), 0.0) / k_count;
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = (lw[k] - mean) / (k_count - 1.0) + (gamma - 1.0) / k_count - (1.0 - gamma) * log_keep;
    }
    return out;
  }

  const double scale = 1.0 - ws.alpha();
  const double log_total = log_sum_exp(ws.tempered_log_weights());
  const auto rest = detail::leave_one_out_log_sum_exp(ws.tempered_log_weights());
  const double log_floor = clip_eps > 0.0 ? std::log(clip_eps) : -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    // log(1 - min(1 - eps, v_k)) = max(log eps, log(1 - v_k)), with log(1 - v_k) taken in log-space.
    const double log_one_minus_v = std::max(log_floor, rest[k] - log_total);
    out[k] = (log_keep - log_one_minus_v) / scale + (gamma - 1.0) * ws.normalized(k) - (1.0 - gamma) * log_keep;
  }
  return out;
}

/// Plain score-function estimator sum_k d_k(alpha) h_k.
template <ScoreModel M>
GradientEstimate reinforce(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                           RandomStream& rng) {
  detail::require_score(model, "reinforce");
  const auto p = detail::draw_particles(model, x, spec.K, rng);
  const WeightSet ws{p.log_w, spec.alpha};
  const auto d = ws.prefactors();
  return detail::assemble(model, x, p, ws, d, std::vector<double>(ws.size(), 0.0));
}

/// VIMCO: sum_k (log Z_K - log Z^_[-k]) h_k + sum_k v_k grad_phi log w_k, where
/// grad_phi log w_k = -h_k because p does not depend on phi.
template <ScoreModel M>
GradientEstimate vimco(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                       RandomStream& rng) {
  detail::require_score(model, "vimco");
  detail::require(spec.K >= 2, "vimco: needs K >= 2");
  const auto p = detail::draw_particles(model, x, spec.K, rng);
  const WeightSet ws{p.log_w, spec.alpha};
  auto controls = vimco_controls(ws, spec.kind == EstimatorKind::kVimcoGeom);
  std::vector<double> coefs(ws.size());
  for (std::size_t k = 0; k < ws.size(); ++k) {
    coefs[k] = (ws.log_z() - controls[k]) - ws.normalized(k);
  }
  return detail::assemble(model, x, p, ws, coefs, std::move(controls));
}

/// OVIS-MC with S auxiliary proposal samples (K + S weight evaluations).
template <ScoreModel M>
GradientEstimate ovis_mc(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                         RandomStream& rng) {
  detail::require_score(model, "ovis-mc");
  detail::require(spec.S.has_value(), "ovis-mc: S is required");
  const auto p = detail::draw_particles(model, x, spec.K, rng);
  const auto aux = detail::draw_particles(model, x, *spec.S, rng);
  const WeightSet ws{p.log_w, spec.alpha};
  auto controls = ovis_mc_controls(ws, aux.log_w);
  auto coefs = ws.prefactors();
  for (std::size_t k = 0; k < coefs.size(); ++k) {
    coefs[k] -= controls[k];
  }
  return detail::assemble(model, x, p, ws, coefs, std::move(controls));
}

/// OVIS-gamma, interpolating the large-ESS (gamma = 0) and ESS ~ 1 (gamma = 1) controls.
template <ScoreModel M>
GradientEstimate ovis_gamma(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                            RandomStream& rng) {
  detail::require_score(model, "ovis-gamma");
  detail::require(spec.gamma.has_value(), "ovis-gamma: gamma is required");
  detail::require(spec.K >= 2, "ovis-gamma: needs K >= 2");
  const auto p = detail::draw_particles(model, x, spec.K, rng);
  const WeightSet ws{p.log_w, spec.alpha};
  const auto coefs = ovis_gamma_prefactors(ws, *spec.gamma, spec.clip_eps);
  return detail::assemble(model, x, p, ws, coefs, ovis_gamma_controls(ws, *spec.gamma));
}

/// Reweighted wake-sleep, wake-phase phi: sum_k v_k h_k.
template <ScoreModel M>
GradientEstimate rws_wake_phi(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                              RandomStream& rng) {
  detail::require_score(model, "rws-wake-phi");
  const auto p = detail::draw_particles(model, x, spec.K, rng);
  const WeightSet ws{p.log_w, spec.alpha};
  return detail::assemble(model, x, p, ws, ws.normalized(), {});
}

/// Reweighted wake-sleep, sleep-phase phi: sum_k h_k over K dreamed pairs (x_k, z_k) ~ p_theta.
/// No data is involved and no theta-gradient is produced.
template <ScoreModel M>
GradientEstimate rws_sleep_phi(const M& model, const EstimatorSpec& spec, RandomStream& rng) {
  if constexpr (GenerativeModel<M>) {
    detail::require_score(model, "rws-sleep-phi");
    if (!model.capabilities().has_generative_sampling) {
      throw CapabilityError("rws-sleep-phi: model cannot sample from p_theta");
    }
    GradientEstimate est;
    est.phi_grad.assign(model.phi().size(), 0.0);
    const double one = 1.0;
    for (int k = 0; k < spec.K; ++k) {
      const auto [x, z] = model.sample_joint(rng);
      model.accumulate_scores(x, std::span<const typename M::latent_type>{&z, 1}, std::span<const double>{&one, 1},
                              est.phi_grad);
    }
    est.aux.ess = 1.0;
    return est;
  } else {
    (void)model;
    (void)spec;
    (void)rng;
    throw CapabilityError("rws-sleep-phi: model cannot sample from p_theta");
  }
}

}  // namespace ovis

#endif  // OVIS_ESTIMATORS_SCORE_FUNCTION_HPP
