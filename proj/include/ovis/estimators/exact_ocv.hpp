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

#ifndef OVIS_ESTIMATORS_EXACT_OCV_HPP
#define OVIS_ESTIMATORS_EXACT_OCV_HPP

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

/// Per-particle split d_k = f_k + f_minus_k with f_minus_k = E_k[d_k], and the
/// variance-optimal controls built from it.
struct ControlVariateTerms {
  std::vector<double> f_k;
  std::vector<double> f_minus_k;
  std::vector<double> controls;
};

namespace detail {

// Everything about a single latent value that the enumeration needs.
struct EnumeratedLatents {
  std::vector<double> q;
  std::vector<double> log_w;
  // gram[a * C + b] = h(a)^T h(b)
  std::vector<double> gram;
  int cardinality{0};

  [[nodiscard]] double dot(int a, int b) const {
    return gram[static_cast<std::size_t>(a) * static_cast<std::size_t>(cardinality) + static_cast<std::size_t>(b)];
  }
};

template <class M>
EnumeratedLatents enumerate_with_scores(const M& model, const typename M::observation_type& x) {
  EnumeratedLatents e;
  const auto terms = enumerate_latents(model, x);
  e.cardinality = static_cast<int>(terms.size());
  const auto c = terms.size();
  std::vector<std::vector<double>> scores;
  scores.reserve(c);
  for (const auto& t : terms) {
    e.q.push_back(std::exp(t.log_q));
    e.log_w.push_back(t.log_joint - t.log_q);
    scores.push_back(model.score(x, t.z));
  }
  e.gram.assign(c * c, 0.0);
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a; b < c; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < scores[a].size(); ++i) {
        s += scores[a][i] * scores[b][i];
      }
      e.gram[a * c + b] = s;
      e.gram[b * c + a] = s;
    }
  }
  return e;
}

// d(alpha) for a tuple of latent indices.
inline std::vector<double> prefactors_of(const EnumeratedLatents& e, std::span<const int> zs, double alpha) {
  std::vector<double> lw(zs.size());
  for (std::size_t k = 0; k < zs.size(); ++k) {
    lw[k] = e.log_w[static_cast<std::size_t>(zs[k])];
  }
  return WeightSet{std::move(lw), alpha}.prefactors();
}

// E_l[d_l] for the tuple zs (entry l marginalizes z_l only).
inline std::vector<double> marginal_prefactors(const EnumeratedLatents& e, std::vector<int> zs, double alpha) {
  std::vector<double> out(zs.size(), 0.0);
  for (std::size_t l = 0; l < zs.size(); ++l) {
    const int keep = zs[l];
    for (int c = 0; c < e.cardinality; ++c) {
      zs[l] = c;
      out[l] += e.q[static_cast<std::size_t>(c)] * prefactors_of(e, zs, alpha)[l];
    }
    zs[l] = keep;
  }
  return out;
}

}  // namespace detail

/// Exact decomposition and optimal controls
/// c_k = f_minus_k + sum_l E_k[f_l h_k^T h_l] / E_k[|h_k|^2],
/// every E_k computed by enumerating z_k with z_{-k} held fixed.
template <class M>
ControlVariateTerms exact_control_terms(const M& model, const typename M::observation_type& x,
                                        std::span<const int> zs, double alpha) {
  if constexpr (EnumerableModel<M>) {
    const auto e = detail::enumerate_with_scores(model, x);
    const std::size_t n = zs.size();
    detail::require(n >= 1, "exact_control_terms: need at least one particle");
    std::vector<int> tuple(zs.begin(), zs.end());

    ControlVariateTerms out;
    const auto d = detail::prefactors_of(e, tuple, alpha);
    out.f_minus_k = detail::marginal_prefactors(e, tuple, alpha);
    out.f_k.resize(n);
    out.controls.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      out.f_k[k] = d[k] - out.f_minus_k[k];
    }

    for (std::size_t k = 0; k < n; ++k) {
      const int keep = tuple[k];
      double numerator = 0.0;
      double norm = 0.0;
      for (int c = 0; c < e.cardinality; ++c) {
        tuple[k] = c;
        const double qc = e.q[static_cast<std::size_t>(c)];
        const auto dc = detail::prefactors_of(e, tuple, alpha);
        const auto mc = detail::marginal_prefactors(e, tuple, alpha);
        double inner = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
          inner += (dc[l] - mc[l]) * e.dot(c, tuple[l]);
        }
        numerator += qc * inner;
        norm += qc * e.dot(c, c);
      }
      tuple[k] = keep;
      out.controls[k] = out.f_minus_k[k] + (norm > 0.0 ? numerator / norm : 0.0);
    }
    return out;
  } else {
    (void)model;
    (void)x;
    (void)zs;
    (void)alpha;
    throw CapabilityError("exact-ocv: model latent space is not enumerable");
  }
}

/// Score-function estimator with the exact optimal control variate.
template <ScoreModel M>
GradientEstimate exact_optimal_cv(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                                  RandomStream& rng) {
  if constexpr (EnumerableModel<M>) {
    if (!model.capabilities().has_score) {
      throw CapabilityError("exact-ocv: model has no analytic score");
    }
    const auto p = detail::draw_particles(model, x, spec.K, rng);
    const WeightSet ws{p.log_w, spec.alpha};
    auto terms = exact_control_terms(model, x, std::span<const int>{p.z}, spec.alpha);
    auto coefs = ws.prefactors();
    for (std::size_t k = 0; k < coefs.size(); ++k) {
      coefs[k] -= terms.controls[k];
    }
    GradientEstimate est;
    est.phi_grad = detail::combine_scores(model, x, std::span<const int>{p.z}, coefs);
    est.theta_grad = detail::theta_from_weights(model, x, std::span<const int>{p.z}, ws);
    est.aux = detail::aux_from(ws);
    est.aux.controls = std::move(terms.controls);
    return est;
  } else {
    (void)model;
    (void)x;
    (void)spec;
    (void)rng;
    throw CapabilityError("exact-ocv: model latent space is not enumerable");
  }
}

}  // namespace ovis

#endif  // OVIS_ESTIMATORS_EXACT_OCV_HPP
