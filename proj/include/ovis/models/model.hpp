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

#ifndef OVIS_MODELS_MODEL_HPP
#define OVIS_MODELS_MODEL_HPP

#include <concepts>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/parameters.hpp>
#include <ovis/rng.hpp>

/**
 * \file
 * \brief The contract between models and gradient estimators.
 *
 * A model bundles a generative model p_theta(x, z) with an inference network
 * q_phi(z | x). Estimators are templates over the concepts below and query
 * capabilities before doing anything model-specific; a missing capability is a
 * CapabilityError, never a compile failure or a crash.
 */

namespace ovis {

struct ModelCapabilities {
  bool has_score{false};
  bool has_pathwise{false};
  /// Cardinality of a finite latent space, if the latent can be enumerated.
  std::optional<int> enumerable_latent;
  bool has_generative_sampling{false};
};

/// Minimal contract for score-function estimators.
///
/// `accumulate_scores` adds sum_k coefs[k] * grad_phi log q(zs[k] | x) to `out`,
/// and `accumulate_theta_gradients` adds sum_k coefs[k] * grad_theta log p(x, zs[k]).
template <class M>
concept ScoreModel = requires(const M& m, M& mut, const typename M::observation_type& x,
                              const typename M::latent_type& z, RandomStream& rng,
                              std::span<const typename M::latent_type> zs, std::span<const double> coefs,
                              std::span<double> out) {
  typename M::observation_type;
  typename M::latent_type;
  { m.capabilities() } -> std::same_as<ModelCapabilities>;
  { m.phi() } -> std::same_as<const ParameterVector&>;
  { m.theta() } -> std::same_as<const ParameterVector&>;
  { mut.phi() } -> std::same_as<ParameterVector&>;
  { mut.theta() } -> std::same_as<ParameterVector&>;
  { m.sample_q(x, rng) } -> std::same_as<typename M::latent_type>;
  { m.log_q(x, z) } -> std::same_as<double>;
  { m.log_joint(x, z) } -> std::same_as<double>;
  { m.score(x, z) } -> std::same_as<std::vector<double>>;
  m.accumulate_scores(x, zs, coefs, out);
  m.accumulate_theta_gradients(x, zs, coefs, out);
};

/// Reparameterizable inference network: z = transform(x, noise).
///
/// `dlogw_dz` is the partial derivative of log p(x, z) - log q(z | x) in z at fixed
/// phi, and `accumulate_path_gradient` adds coef * (dz/dphi)^T upstream to `out`.
template <class M>
concept PathwiseModel = ScoreModel<M> && requires(const M& m, const typename M::observation_type& x,
                                                  const typename M::latent_type& z,
                                                  const typename M::noise_type& eps, RandomStream& rng,
                                                  std::span<const double> upstream, double coef,
                                                  std::span<double> out) {
  typename M::noise_type;
  { m.sample_noise(x, rng) } -> std::same_as<typename M::noise_type>;
  { m.transform(x, eps) } -> std::same_as<typename M::latent_type>;
  { m.dlogw_dz(x, z) } -> std::same_as<std::vector<double>>;
  m.accumulate_path_gradient(x, eps, upstream, coef, out);
};

/// Finite latent space {0, ..., C-1}.
template <class M>
concept EnumerableModel = ScoreModel<M> && std::same_as<typename M::latent_type, int> && requires(const M& m) {
  { m.latent_cardinality() } -> std::same_as<int>;
};

/// Can dream (x, z) ~ p_theta for sleep-phase updates.
template <class M>
concept GenerativeModel = ScoreModel<M> && requires(const M& m, RandomStream& rng) {
  { m.sample_joint(rng) } -> std::same_as<std::pair<typename M::observation_type, typename M::latent_type>>;
};

/// Optional fast path: many q draws for one x, returned with their log q.
template <class M>
concept BatchSampler = ScoreModel<M> && requires(const M& m, const typename M::observation_type& x, int count,
                                                 RandomStream& rng) {
  {
    m.sample_q_many(x, count, rng)
  } -> std::same_as<std::pair<std::vector<typename M::latent_type>, std::vector<double>>>;
};

/// One latent value with its log-densities under q and the joint.
struct LatentTerm {
  int z;
  double log_q;
  double log_joint;
};

/// All latent values of an enumerable model, each exactly once.
template <class M>
std::vector<LatentTerm> enumerate_latents(const M& model, const typename M::observation_type& x) {
  if constexpr (EnumerableModel<M>) {
    const int c = model.latent_cardinality();
    std::vector<LatentTerm> terms;
    terms.reserve(static_cast<std::size_t>(c));
    for (int z = 0; z < c; ++z) {
      terms.push_back(LatentTerm{z, model.log_q(x, z), model.log_joint(x, z)});
    }
    return terms;
  } else {
    (void)model;
    (void)x;
    throw CapabilityError("enumerate_latents: model latent space is not enumerable");
  }
}

}  // namespace ovis

#endif  // OVIS_MODELS_MODEL_HPP
