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

#ifndef OVIS_ESTIMATORS_PATHWISE_HPP
#define OVIS_ESTIMATORS_PATHWISE_HPP

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

enum class PathwiseVariant { kIwae, kStl, kDreg };

/// Reparameterized gradients of log Z_K(alpha):
///   iwae  sum_k v_k (J_k^T dlogw/dz_k - h_k)
///   stl   sum_k v_k J_k^T dlogw/dz_k
///   dreg  sum_k v_k^2 J_k^T dlogw/dz_k
template <ScoreModel M>
GradientEstimate pathwise_gradient(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                                   PathwiseVariant variant, RandomStream& rng) {
  if constexpr (PathwiseModel<M>) {
    if (!model.capabilities().has_pathwise) {
      throw CapabilityError("pathwise: model is not reparameterizable");
    }
    if (variant != PathwiseVariant::kIwae && spec.alpha != 0.0) {
      throw Unsupported("stl/dreg: only alpha = 0 is implemented");
    }
    const auto count = static_cast<std::size_t>(spec.K);
    std::vector<typename M::noise_type> noise;
    std::vector<typename M::latent_type> zs;
    std::vector<double> log_w;
    noise.reserve(count);
    zs.reserve(count);
    log_w.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      noise.push_back(model.sample_noise(x, rng));
      zs.push_back(model.transform(x, noise.back()));
      log_w.push_back(detail::checked_log_weight(model.log_joint(x, zs.back()), model.log_q(x, zs.back())));
    }
    const WeightSet ws{std::move(log_w), spec.alpha};

    GradientEstimate est;
    est.phi_grad.assign(model.phi().size(), 0.0);
    for (std::size_t k = 0; k < count; ++k) {
      const double v = ws.normalized(k);
      const double coef = variant == PathwiseVariant::kDreg ? v * v : v;
      const auto upstream = model.dlogw_dz(x, zs[k]);
      model.accumulate_path_gradient(x, noise[k], upstream, coef, est.phi_grad);
    }
    if (variant == PathwiseVariant::kIwae) {
      std::vector<double> minus_v(count);
      for (std::size_t k = 0; k < count; ++k) {
        minus_v[k] = -ws.normalized(k);
      }
      model.accumulate_scores(x, std::span<const typename M::latent_type>{zs}, minus_v, est.phi_grad);
    }
    est.theta_grad = detail::theta_from_weights(model, x, std::span<const typename M::latent_type>{zs}, ws);
    est.aux = detail::aux_from(ws);
    return est;
  } else {
    (void)model;
    (void)x;
    (void)spec;
    (void)variant;
    (void)rng;
    throw CapabilityError("pathwise: model is not reparameterizable");
  }
}

}  // namespace ovis

#endif  // OVIS_ESTIMATORS_PATHWISE_HPP
