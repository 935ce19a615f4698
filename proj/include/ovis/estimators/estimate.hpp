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

#ifndef OVIS_ESTIMATORS_ESTIMATE_HPP
#define OVIS_ESTIMATORS_ESTIMATE_HPP

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/models/model.hpp>
#include <ovis/rng.hpp>
#include <ovis/weights.hpp>

namespace ovis {

/// Diagnostics attached to one gradient estimate.
struct EstimateAux {
  double ess{1.0};
  double log_z{0.0};
  /// Single-sample bound estimate (1 - alpha)^-1 log Z_K(alpha).
  double bound{0.0};
  /// Per-particle control variates c_k (empty for estimators without one).
  std::vector<double> controls;
};

struct GradientEstimate {
  std::vector<double> phi_grad;
  std::optional<std::vector<double>> theta_grad;
  EstimateAux aux;
};

/// K particles drawn from q for one datapoint, with their log-weights.
template <ScoreModel M>
struct Particles {
  std::vector<typename M::latent_type> z;
  std::vector<double> log_w;
};

namespace detail {

inline double checked_log_weight(double log_joint, double log_q) {
  const double lw = log_joint - log_q;
  if (!std::isfinite(lw)) {
    throw NonFiniteError("non-finite log importance weight");
  }
  return lw;
}

template <ScoreModel M>
Particles<M> draw_particles(const M& model, const typename M::observation_type& x, int count, RandomStream& rng) {
  Particles<M> p;
  if constexpr (BatchSampler<M>) {
    auto [zs, log_q] = model.sample_q_many(x, count, rng);
    for (std::size_t k = 0; k < zs.size(); ++k) {
      p.log_w.push_back(checked_log_weight(model.log_joint(x, zs[k]), log_q[k]));
    }
    p.z = std::move(zs);
    return p;
  }
  p.z.reserve(static_cast<std::size_t>(count));
  p.log_w.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    auto z = model.sample_q(x, rng);
    p.log_w.push_back(checked_log_weight(model.log_joint(x, z), model.log_q(x, z)));
    p.z.push_back(std::move(z));
  }
  return p;
}

template <ScoreModel M>
std::vector<double> log_weights_of(const M& model, const typename M::observation_type& x,
                                   std::span<const typename M::latent_type> zs) {
  std::vector<double> lw;
  lw.reserve(zs.size());
  for (const auto& z : zs) {
    lw.push_back(checked_log_weight(model.log_joint(x, z), model.log_q(x, z)));
  }
  return lw;
}

inline EstimateAux aux_from(const WeightSet& ws) {
  return EstimateAux{ess(ws), ws.log_z(), ws.bound(), {}};
}

template <ScoreModel M>
std::vector<double> combine_scores(const M& model, const typename M::observation_type& x,
                                   std::span<const typename M::latent_type> zs, std::span<const double> coefs) {
  std::vector<double> g(model.phi().size(), 0.0);
  model.accumulate_scores(x, zs, coefs, g);
  return g;
}

template <ScoreModel M>
std::vector<double> theta_from_weights(const M& model, const typename M::observation_type& x,
                                       std::span<const typename M::latent_type> zs, const WeightSet& ws) {
  std::vector<double> g(model.theta().size(), 0.0);
  model.accumulate_theta_gradients(x, zs, ws.normalized(), g);
  return g;
}

}  // namespace detail

/// theta-gradient sum_k v_k(alpha) grad_theta log w_k for given particles.
template <ScoreModel M>
std::vector<double> theta_gradient(const M& model, const typename M::observation_type& x,
                                   std::span<const typename M::latent_type> zs, double alpha) {
  if (!model.capabilities().has_score) {
    throw CapabilityError("theta_gradient: model exposes no analytic gradients");
  }
  const WeightSet ws{detail::log_weights_of(model, x, zs), alpha};
  return detail::theta_from_weights(model, x, zs, ws);
}

}  // namespace ovis

#endif  // OVIS_ESTIMATORS_ESTIMATE_HPP
