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

#ifndef OVIS_DIAGNOSTICS_POSTERIOR_HPP
#define OVIS_DIAGNOSTICS_POSTERIOR_HPP

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/models/model.hpp>
#include <ovis/weights.hpp>

namespace ovis {

/// Euclidean distance between two probability vectors.
inline double probability_l2(std::span<const double> p, std::span<const double> q) {
  detail::require(p.size() == q.size(), "probability_l2: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += (p[i] - q[i]) * (p[i] - q[i]);
  }
  return std::sqrt(s);
}

/// p(z | x) by enumeration.
template <class M>
std::vector<double> enumerated_posterior(const M& model, const typename M::observation_type& x) {
  const auto terms = enumerate_latents(model, x);
  std::vector<double> lj;
  for (const auto& t : terms) {
    lj.push_back(t.log_joint);
  }
  const double total = log_sum_exp(lj);
  for (double& v : lj) {
    v = std::exp(v - total);
  }
  return lj;
}

template <class M>
std::vector<double> enumerated_q(const M& model, const typename M::observation_type& x) {
  std::vector<double> q;
  for (const auto& t : enumerate_latents(model, x)) {
    q.push_back(std::exp(t.log_q));
  }
  return q;
}

template <class M>
concept HasPriorProbabilities = requires(const M& m) {
  { m.prior_probs() } -> std::same_as<std::vector<double>>;
};

struct PosteriorMetrics {
  /// (1/M) sum_m |q(z | x_m) - p_theta*(z | x_m)|_2
  double posterior_l2{0.0};
  /// |p_theta(z) - p_theta*(z)|_2, NaN when the model exposes no prior probabilities.
  double parameter_l2{std::numeric_limits<double>::quiet_NaN()};
};

/// Compares the model's q against the exact posterior under theta_star.
template <class M>
PosteriorMetrics posterior_l2(const M& model, std::span<const double> theta_star,
                              std::span<const typename M::observation_type> test_xs) {
  if (!model.capabilities().enumerable_latent) {
    throw CapabilityError("posterior_l2: model latent space is not enumerable");
  }
  detail::require(!test_xs.empty(), "posterior_l2: empty test set");
  M reference = model;
  detail::require(theta_star.size() == reference.theta().size(), "posterior_l2: theta size mismatch");
  std::copy(theta_star.begin(), theta_star.end(), reference.theta().values().begin());

  PosteriorMetrics out;
  out.posterior_l2 = 0.0;
  for (const auto& x : test_xs) {
    out.posterior_l2 += probability_l2(enumerated_q(model, x), enumerated_posterior(reference, x));
  }
  out.posterior_l2 /= static_cast<double>(test_xs.size());
  if constexpr (HasPriorProbabilities<M>) {
    out.parameter_l2 = probability_l2(model.prior_probs(), reference.prior_probs());
  }
  return out;
}

}  // namespace ovis

#endif  // OVIS_DIAGNOSTICS_POSTERIOR_HPP
