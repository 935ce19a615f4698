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

#ifndef OVIS_MODELS_GMM_HPP
#define OVIS_MODELS_GMM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/models/model.hpp>
#include <ovis/parameters.hpp>
#include <ovis/rng.hpp>
#include <ovis/weights.hpp>

/**
 * \file
 * \brief Gaussian mixture testbed with a categorical inference network.
 *
 * p(z) = Cat(softmax(theta)), p(x | z) = N(10 z, 5^2), and
 * q(z | x) = Cat(softmax(eta(x))) where eta is a 1-H-C tanh perceptron.
 */

namespace ovis {

namespace detail {

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(), [lse](double v) { return v - lse; });
  return out;
}

}  // namespace detail

class GmmModel {
 public:
  using observation_type = double;
  using latent_type = int;

  static constexpr int kHidden = 16;
  static constexpr double kMeanSpacing = 10.0;
  static constexpr double kEmissionStd = 5.0;

  explicit GmmModel(int clusters) : clusters_{clusters} {
    detail::require(clusters >= 2, "GmmModel: need at least two clusters");
    const auto c = static_cast<std::size_t>(clusters);
    phi_.add_segment("W1", kHidden);
    phi_.add_segment("b1", kHidden);
    phi_.add_segment("W2", c * kHidden);
    phi_.add_segment("b2", c);
    theta_.add_segment("logits", c);
  }

  [[nodiscard]] int clusters() const { return clusters_; }
  [[nodiscard]] int latent_cardinality() const { return clusters_; }

  [[nodiscard]] ModelCapabilities capabilities() const {
    return ModelCapabilities{.has_score = true, .has_pathwise = false, .enumerable_latent = clusters_,
                             .has_generative_sampling = true};
  }

  [[nodiscard]] const ParameterVector& phi() const { return phi_; }
  [[nodiscard]] ParameterVector& phi() { return phi_; }
  [[nodiscard]] const ParameterVector& theta() const { return theta_; }
  [[nodiscard]] ParameterVector& theta() { return theta_; }

  /// Hidden activations and output logits of the inference network.
  struct Forward {
    std::vector<double> hidden;
    std::vector<double> log_q;
  };

  [[nodiscard]] Forward forward(observation_type x) const {
    const auto w1 = phi_.segment_values("W1");
    const auto b1 = phi_.segment_values("b1");
    const auto w2 = phi_.segment_values("W2");
    const auto b2 = phi_.segment_values("b2");
    Forward f;
    f.hidden.resize(kHidden);
    for (std::size_t j = 0; j < kHidden; ++j) {
      f.hidden[j] = std::tanh(w1[j] * x + b1[j]);
    }
    std::vector<double> logits(static_cast<std::size_t>(clusters_));
    for (std::size_t c = 0; c < logits.size(); ++c) {
      double acc = b2[c];
      for (std::size_t j = 0; j < kHidden; ++j) {
        acc += w2[c * kHidden + j] * f.hidden[j];
      }
      logits[c] = acc;
    }
    f.log_q = detail::log_softmax(logits);
    return f;
  }

  [[nodiscard]] std::vector<double> q_probs(observation_type x) const {
    auto lq = forward(x).log_q;
    for (double& v : lq) {
      v = std::exp(v);
    }
    return lq;
  }

  [[nodiscard]] std::vector<double> log_prior() const { return detail::log_softmax(theta_.values()); }

  [[nodiscard]] std::vector<double> prior_probs() const {
    auto lp = log_prior();
    for (double& v : lp) {
      v = std::exp(v);
    }
    return lp;
  }

  [[nodiscard]] double log_emission(observation_type x, latent_type z) const {
    const double r = (x - kMeanSpacing * z) / kEmissionStd;
    return -0.5 * r * r - std::log(kEmissionStd) - 0.5 * std::log(2.0 * std::numbers::pi);
  }

  [[nodiscard]] latent_type sample_q(observation_type x, RandomStream& rng) const {
    return rng.categorical(q_probs(x));
  }

  /// `count` draws from q with their log-probabilities, sharing one network pass.
  [[nodiscard]] std::pair<std::vector<latent_type>, std::vector<double>> sample_q_many(observation_type x, int count,
                                                                                       RandomStream& rng) const {
    const auto lq = forward(x).log_q;
    std::vector<double> probs(lq.size());
    std::transform(lq.begin(), lq.end(), probs.begin(), [](double v) { return std::exp(v); });
    std::pair<std::vector<latent_type>, std::vector<double>> out;
    for (int k = 0; k < count; ++k) {
      const int z = rng.categorical(probs);
      out.first.push_back(z);
      out.second.push_back(lq[static_cast<std::size_t>(z)]);
    }
    return out;
  }

  [[nodiscard]] double log_q(observation_type x, latent_type z) const {
    check_latent(z);
    return forward(x).log_q[static_cast<std::size_t>(z)];
  }

  [[nodiscard]] double log_joint(observation_type x, latent_type z) const {
    check_latent(z);
    return log_prior()[static_cast<std::size_t>(z)] + log_emission(x, z);
  }

  /// Exact log p_theta(x) by summing over clusters.
  [[nodiscard]] double log_marginal(observation_type x) const {
    const auto lp = log_prior();
    std::vector<double> terms(lp.size());
    for (std::size_t c = 0; c < lp.size(); ++c) {
      terms[c] = lp[c] + log_emission(x, static_cast<int>(c));
    }
    return log_sum_exp(terms);
  }

  /// Exact posterior p_theta(z | x).
  [[nodiscard]] std::vector<double> posterior(observation_type x) const {
    const auto lp = log_prior();
    std::vector<double> terms(lp.size());
    for (std::size_t c = 0; c < lp.size(); ++c) {
      terms[c] = lp[c] + log_emission(x, static_cast<int>(c));
    }
    auto out = detail::log_softmax(terms);
    for (double& v : out) {
      v = std::exp(v);
    }
    return out;
  }

  [[nodiscard]] std::vector<double> score(observation_type x, latent_type z) const {
    std::vector<double> out(phi_.size(), 0.0);
    const double one = 1.0;
    accumulate_scores(x, std::span<const int>{&z, 1}, std::span<const double>{&one, 1}, out);
    return out;
  }

  /// The scores share one Jacobian, so the weighted sum needs a single backward pass:
  /// sum_k c_k grad log q(z_k) = J^T sum_k c_k (e_{z_k} - q).
  void accumulate_scores(observation_type x, std::span<const latent_type> zs, std::span<const double> coefs,
                         std::span<double> out) const {
    detail::require(zs.size() == coefs.size(), "accumulate_scores: size mismatch");
    detail::require(out.size() == phi_.size(), "accumulate_scores: output has wrong size");
    const auto f = forward(x);
    const auto c = static_cast<std::size_t>(clusters_);
    std::vector<double> g_logits(c, 0.0);
    double coef_sum = 0.0;
    for (std::size_t k = 0; k < zs.size(); ++k) {
      check_latent(zs[k]);
      g_logits[static_cast<std::size_t>(zs[k])] += coefs[k];
      coef_sum += coefs[k];
    }
    for (std::size_t i = 0; i < c; ++i) {
      g_logits[i] -= coef_sum * std::exp(f.log_q[i]);
    }
    backward(x, f, g_logits, out);
  }

  void accumulate_theta_gradients(observation_type /*x*/, std::span<const latent_type> zs,
                                  std::span<const double> coefs, std::span<double> out) const {
    detail::require(zs.size() == coefs.size(), "accumulate_theta_gradients: size mismatch");
    detail::require(out.size() == theta_.size(), "accumulate_theta_gradients: output has wrong size");
    const auto prior = prior_probs();
    double coef_sum = 0.0;
    for (std::size_t k = 0; k < zs.size(); ++k) {
      check_latent(zs[k]);
      out[static_cast<std::size_t>(zs[k])] += coefs[k];
      coef_sum += coefs[k];
    }
    for (std::size_t i = 0; i < prior.size(); ++i) {
      out[i] -= coef_sum * prior[i];
    }
  }

  [[nodiscard]] std::pair<observation_type, latent_type> sample_joint(RandomStream& rng) const {
    const int z = rng.categorical(prior_probs());
    const double x = kMeanSpacing * z + kEmissionStd * rng.normal();
    return {x, z};
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias of a layer.
  void initialize_network(std::uint64_t seed) {
    RandomStream rng{seed, 0x6d6c70ULL};
    auto fill = [&rng](std::span<double> values, double fan_in) {
      const double bound = 1.0 / std::sqrt(fan_in);
      for (double& v : values) {
        v = bound * (2.0 * rng.uniform() - 1.0);
      }
    };
    fill(phi_.segment_values("W1"), 1.0);
    fill(phi_.segment_values("b1"), 1.0);
    fill(phi_.segment_values("W2"), kHidden);
    fill(phi_.segment_values("b2"), kHidden);
  }

 private:
  void check_latent(latent_type z) const {
    if (z < 0 || z >= clusters_) {
      throw InvalidArgument("GmmModel: latent value " + std::to_string(z) + " outside [0, " +
                            std::to_string(clusters_) + ")");
    }
  }

  void backward(observation_type x, const Forward& f, std::span<const double> g_logits, std::span<double> out) const {
    const auto& w1 = phi_.segment("W1");
    const auto& b1 = phi_.segment("b1");
    const auto& w2 = phi_.segment("W2");
    const auto& b2 = phi_.segment("b2");
    const auto w2v = phi_.segment_values("W2");
    const auto c = static_cast<std::size_t>(clusters_);
    std::vector<double> g_hidden(kHidden, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
      out[b2.offset + i] += g_logits[i];
      for (std::size_t j = 0; j < kHidden; ++j) {
        out[w2.offset + i * kHidden + j] += g_logits[i] * f.hidden[j];
        g_hidden[j] += g_logits[i] * w2v[i * kHidden + j];
      }
    }
    for (std::size_t j = 0; j < kHidden; ++j) {
      const double g_pre = g_hidden[j] * (1.0 - f.hidden[j] * f.hidden[j]);
      out[w1.offset + j] += g_pre * x;
      out[b1.offset + j] += g_pre;
    }
  }

  int clusters_;
  ParameterVector phi_;
  ParameterVector theta_;
};

/// Logits of the true prior, p(z = c) proportional to c + 5 for c in {0, ..., C-1}.
inline std::vector<double> gmm_true_logits(int clusters) {
  detail::require(clusters >= 2, "gmm_true_logits: need at least two clusters");
  double normalizer = 0.0;
  for (int c = 0; c < clusters; ++c) {
    normalizer += c + 5.0;
  }
  std::vector<double> logits(static_cast<std::size_t>(clusters));
  for (int c = 0; c < clusters; ++c) {
    logits[static_cast<std::size_t>(c)] = std::log((c + 5.0) / normalizer);
  }
  return logits;
}

/// A GMM with the true prior and a freshly initialized inference network.
inline GmmModel gmm_make(int clusters, std::uint64_t seed = 0) {
  detail::require(clusters >= 2, "gmm_make: C must be at least 2");
  GmmModel model{clusters};
  const auto logits = gmm_true_logits(clusters);
  std::copy(logits.begin(), logits.end(), model.theta().values().begin());
  model.initialize_network(seed);
  return model;
}

}  // namespace ovis

#endif  // OVIS_MODELS_GMM_HPP
