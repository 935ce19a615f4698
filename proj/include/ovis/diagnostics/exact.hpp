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

#ifndef OVIS_DIAGNOSTICS_EXACT_HPP
#define OVIS_DIAGNOSTICS_EXACT_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/models/model.hpp>
#include <ovis/weights.hpp>

namespace ovis {

/// Exact bound and gradients, by summing over every latent tuple.
struct ExactGradient {
  std::vector<double> phi_grad;
  std::vector<double> theta_grad;
  double bound{0.0};
};

inline constexpr double kMaxEnumeratedTuples = 1e6;

/// grad_phi L_K^alpha = E[sum_k d_k h_k] and grad_theta L_K^alpha = E[sum_k v_k grad_theta log w_k],
/// each expectation summed exactly over all C^K tuples.
template <class M>
ExactGradient exact_iwae_gradient(const M& model, const typename M::observation_type& x, int K, double alpha) {
  if constexpr (EnumerableModel<M>) {
    detail::require(K >= 1, "exact_iwae_gradient: K must be positive");
    detail::validate_alpha(alpha);
    const auto terms = enumerate_latents(model, x);
    const auto c = terms.size();
    detail::require(std::pow(static_cast<double>(c), K) <= kMaxEnumeratedTuples,
                    "exact_iwae_gradient: C^K exceeds the enumeration guard of 1e6 tuples");
    const auto n = static_cast<std::size_t>(K);

    // Coefficients aggregated per latent value, so each score is touched once.
    std::vector<double> phi_coef(c, 0.0);
    std::vector<double> theta_coef(c, 0.0);
    ExactGradient out;
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> lw(n);
    while (true) {
      double log_prob = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        log_prob += terms[idx[k]].log_q;
        lw[k] = terms[idx[k]].log_joint - terms[idx[k]].log_q;
      }
      const double prob = std::exp(log_prob);
      if (prob > 0.0) {
        const WeightSet ws{lw, alpha};
        const double bound = ws.bound();
        out.bound += prob * bound;
        for (std::size_t k = 0; k < n; ++k) {
          phi_coef[idx[k]] += prob * (bound - ws.normalized(k));
          theta_coef[idx[k]] += prob * ws.normalized(k);
        }
      }
      std::size_t pos = 0;
      while (pos < n && ++idx[pos] == c) {
        idx[pos++] = 0;
      }
      if (pos == n) {
        break;
      }
    }

    std::vector<int> zs(c);
    for (std::size_t i = 0; i < c; ++i) {
      zs[i] = terms[i].z;
    }
    out.phi_grad.assign(model.phi().size(), 0.0);
    out.theta_grad.assign(model.theta().size(), 0.0);
    model.accumulate_scores(x, std::span<const int>{zs}, phi_coef, out.phi_grad);
    model.accumulate_theta_gradients(x, std::span<const int>{zs}, theta_coef, out.theta_grad);
    return out;
  } else {
    (void)model;
    (void)x;
    (void)K;
    (void)alpha;
    throw CapabilityError("exact_iwae_gradient: model latent space is not enumerable");
  }
}

/// Exact L_K^alpha alone.
template <class M>
double exact_bound(const M& model, const typename M::observation_type& x, int K, double alpha) {
  return exact_iwae_gradient(model, x, K, alpha).bound;
}

/// log p(x) by summing the joint over the latent space.
template <class M>
double enumerated_log_marginal(const M& model, const typename M::observation_type& x) {
  const auto terms = enumerate_latents(model, x);
  std::vector<double> lj;
  lj.reserve(terms.size());
  for (const auto& t : terms) {
    lj.push_back(t.log_joint);
  }
  return log_sum_exp(lj);
}

}  // namespace ovis

#endif  // OVIS_DIAGNOSTICS_EXACT_HPP
