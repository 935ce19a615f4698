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

#ifndef OVIS_MODELS_GAUSSIAN_HPP
#define OVIS_MODELS_GAUSSIAN_HPP

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

/**
 * \file
 * \brief Linear-Gaussian testbed.
 *
 * Generative model z ~ N(mu, I), x | z ~ N(z, I); inference network
 * q(z | x) = N(A x + b, (2/3) I) with a fixed covariance. The marginal is
 * p(x) = N(mu, 2 I) and the exact posterior is N((x + mu) / 2, I / 2).
 */

namespace ovis {

class GaussianToyModel {
 public:
  using observation_type = std::vector<double>;
  using latent_type = std::vector<double>;
  using noise_type = std::vector<double>;

  static constexpr double kQVariance = 2.0 / 3.0;

  explicit GaussianToyModel(int dim) : dim_{dim} {
    detail::require(dim >= 1, "GaussianToyModel: dimension must be positive");
    const auto d = static_cast<std::size_t>(dim);
    phi_.add_segment("A", d * d);
    phi_.add_segment("b", d);
    theta_.add_segment("mu", d);
  }

  [[nodiscard]] int dim() const { return dim_; }

  [[nodiscard]] ModelCapabilities capabilities() const {
    return ModelCapabilities{.has_score = true, .has_pathwise = true, .enumerable_latent = std::nullopt,
                             .has_generative_sampling = true};
  }

  [[nodiscard]] const ParameterVector& phi() const { return phi_; }
  [[nodiscard]] ParameterVector& phi() { return phi_; }
  [[nodiscard]] const ParameterVector& theta() const { return theta_; }
  [[nodiscard]] ParameterVector& theta() { return theta_; }

  [[nodiscard]] std::span<const double> matrix_a() const { return phi_.segment_values("A"); }
  [[nodiscard]] std::span<const double> offset_b() const { return phi_.segment_values("b"); }
  [[nodiscard]] std::span<const double> mu() const { return theta_.segment_values("mu"); }

  /// Mean of q(z | x): A x + b.
  [[nodiscard]] std::vector<double> q_mean(const observation_type& x) const {
    check_dim(x);
    const auto d = static_cast<std::size_t>(dim_);
    const auto a = matrix_a();
    const auto b = offset_b();
    std::vector<double> m(d);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = b[i];
      for (std::size_t j = 0; j < d; ++j) {
        acc += a[i * d + j] * x[j];
      }
      m[i] = acc;
    }
    return m;
  }

  [[nodiscard]] latent_type sample_q(const observation_type& x, RandomStream& rng) const {
    return transform(x, sample_noise(x, rng));
  }

  [[nodiscard]] double log_q(const observation_type& x, const latent_type& z) const {
    check_dim(z);
    const auto m = q_mean(x);
    double sq = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      sq += (z[i] - m[i]) * (z[i] - m[i]);
    }
    return -0.5 * sq / kQVariance - 0.5 * dim_ * std::log(2.0 * std::numbers::pi * kQVariance);
  }

  [[nodiscard]] double log_joint(const observation_type& x, const latent_type& z) const {
    check_dim(x);
    check_dim(z);
    const auto m = mu();
    double sq = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      sq += (z[i] - m[i]) * (z[i] - m[i]) + (x[i] - z[i]) * (x[i] - z[i]);
    }
    return -0.5 * sq - dim_ * std::log(2.0 * std::numbers::pi);
  }

  /// Closed-form log p(x) = log N(x; mu, 2 I).
  [[nodiscard]] double log_marginal(const observation_type& x) const {
    check_dim(x);
    const auto m = mu();
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sq += (x[i] - m[i]) * (x[i] - m[i]);
    }
    return -0.25 * sq - 0.5 * dim_ * std::log(4.0 * std::numbers::pi);
  }

  /// grad_phi log q(z | x), laid out as [A (row-major), b].
  [[nodiscard]] std::vector<double> score(const observation_type& x, const latent_type& z) const {
    std::vector<double> out(phi_.size(), 0.0);
    const double one = 1.0;
    accumulate_scores(x, std::span<const latent_type>{&z, 1}, std::span<const double>{&one, 1}, out);
    return out;
  }

  void accumulate_scores(const observation_type& x, std::span<const latent_type> zs, std::span<const double> coefs,
                         std::span<double> out) const {
    detail::require(zs.size() == coefs.size(), "accumulate_scores: size mismatch");
    detail::require(out.size() == phi_.size(), "accumulate_scores: output has wrong size");
    const auto d = static_cast<std::size_t>(dim_);
    const auto m = q_mean(x);
    // Both segments share r = sum_k c_k (z_k - m) / s^2: db = r, dA = r x^T.
    std::vector<double> r(d, 0.0);
    for (std::size_t k = 0; k < zs.size(); ++k) {
      check_dim(zs[k]);
      for (std::size_t i = 0; i < d; ++i) {
        r[i] += coefs[k] * (zs[k][i] - m[i]) / kQVariance;
      }
    }
    add_outer(r, x, out);
  }

  void accumulate_theta_gradients(const observation_type& x, std::span<const latent_type> zs,
                                  std::span<const double> coefs, std::span<double> out) const {
    check_dim(x);
    detail::require(zs.size() == coefs.size(), "accumulate_theta_gradients: size mismatch");
    detail::require(out.size() == theta_.size(), "accumulate_theta_gradients: output has wrong size");
    const auto m = mu();
    for (std::size_t k = 0; k < zs.size(); ++k) {
      check_dim(zs[k]);
      for (std::size_t i = 0; i < m.size(); ++i) {
        out[i] += coefs[k] * (zs[k][i] - m[i]);
      }
    }
  }

  [[nodiscard]] noise_type sample_noise(const observation_type& x, RandomStream& rng) const {
    check_dim(x);
    noise_type eps(static_cast<std::size_t>(dim_));
    for (double& e : eps) {
      e = rng.normal();
    }
    return eps;
  }

  /// z = A x + b + sqrt(2/3) eps.
  [[nodiscard]] latent_type transform(const observation_type& x, const noise_type& eps) const {
    check_dim(eps);
    auto z = q_mean(x);
    const double scale = std::sqrt(kQVariance);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] += scale * eps[i];
    }
    return z;
  }

  /// d/dz [log p(x, z) - log q(z | x)] at fixed phi.
  [[nodiscard]] std::vector<double> dlogw_dz(const observation_type& x, const latent_type& z) const {
    check_dim(z);
    const auto m = q_mean(x);
    const auto mu_v = mu();
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      g[i] = -(z[i] - mu_v[i]) + (x[i] - z[i]) + (z[i] - m[i]) / kQVariance;
    }
    return g;
  }

  /// Adds coef * (dz/dphi)^T upstream; dz/db is the identity and dz/dA_ij = x_j e_i.
  void accumulate_path_gradient(const observation_type& x, const noise_type& eps, std::span<const double> upstream,
                                double coef, std::span<double> out) const {
    check_dim(eps);
    detail::require(upstream.size() == static_cast<std::size_t>(dim_), "accumulate_path_gradient: shape mismatch");
    detail::require(out.size() == phi_.size(), "accumulate_path_gradient: output has wrong size");
    std::vector<double> r(upstream.begin(), upstream.end());
    for (double& v : r) {
      v *= coef;
    }
    add_outer(r, x, out);
  }

  [[nodiscard]] std::pair<observation_type, latent_type> sample_joint(RandomStream& rng) const {
    const auto m = mu();
    latent_type z(m.begin(), m.end());
    observation_type x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] += rng.normal();
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
      x[i] = z[i] + rng.normal();
    }
    return {std::move(x), std::move(z)};
  }

 private:
  void check_dim(std::span<const double> v) const {
    if (v.size() != static_cast<std::size_t>(dim_)) {
      throw InvalidArgument("GaussianToyModel: expected a vector of size " + std::to_string(dim_) + ", got " +
                            std::to_string(v.size()));
    }
  }

  // out[A] += r x^T, out[b] += r.
  void add_outer(std::span<const double> r, const observation_type& x, std::span<double> out) const {
    check_dim(x);
    const auto d = static_cast<std::size_t>(dim_);
    const std::size_t b_offset = d * d;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        out[i * d + j] += r[i] * x[j];
      }
      out[b_offset + i] += r[i];
    }
  }

  int dim_;
  ParameterVector phi_;
  ParameterVector theta_;
};

/// A Gaussian testbed together with its frozen dataset and optimal parameters.
struct GaussianSetup {
  GaussianToyModel model;
  std::vector<std::vector<double>> dataset;
  /// Mean used to generate the data, drawn from N(0, I).
  std::vector<double> mu_true;
  /// Sample mean of the dataset; the optimal generative mean.
  std::vector<double> mu_hat;
  /// Optimal inference parameters: A* = I/2 (row-major) and b* = mu_hat / 2.
  std::vector<double> a_star;
  std::vector<double> b_star;
};

/// Draws mu ~ N(0, I) and N points from the true model, then sets every parameter
/// to its optimum plus N(0, noise_scale^2) perturbations.
inline GaussianSetup gaussian_make(int dim, int n_points, double noise_scale, std::uint64_t seed) {
  detail::require(dim >= 1, "gaussian_make: D must be positive");
  detail::require(n_points >= 1, "gaussian_make: N must be positive");
  detail::require(noise_scale >= 0.0, "gaussian_make: noise_scale must be non-negative");
  const auto d = static_cast<std::size_t>(dim);

  GaussianSetup setup{GaussianToyModel{dim}, {}, {}, {}, {}, {}};
  RandomStream mu_rng{seed, 0x6d75ULL};
  RandomStream data_rng{seed, 0x64617461ULL};
  RandomStream noise_rng{seed, 0x6e6f6973ULL};

  setup.mu_true.resize(d);
  for (double& m : setup.mu_true) {
    m = mu_rng.normal();
  }
  setup.dataset.reserve(static_cast<std::size_t>(n_points));
  setup.mu_hat.assign(d, 0.0);
  for (int n = 0; n < n_points; ++n) {
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double z = setup.mu_true[i] + data_rng.normal();
      x[i] = z + data_rng.normal();
      setup.mu_hat[i] += x[i] / n_points;
    }
    setup.dataset.push_back(std::move(x));
  }

  setup.a_star.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    setup.a_star[i * d + i] = 0.5;
  }
  setup.b_star.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    setup.b_star[i] = 0.5 * setup.mu_hat[i];
  }

  auto a = setup.model.phi().segment_values("A");
  auto b = setup.model.phi().segment_values("b");
  auto mu = setup.model.theta().segment_values("mu");
  for (std::size_t i = 0; i < d * d; ++i) {
    a[i] = setup.a_star[i] + noise_scale * noise_rng.normal();
  }
  for (std::size_t i = 0; i < d; ++i) {
    b[i] = setup.b_star[i] + noise_scale * noise_rng.normal();
  }
  for (std::size_t i = 0; i < d; ++i) {
    mu[i] = setup.mu_hat[i] + noise_scale * noise_rng.normal();
  }
  return setup;
}

}  // namespace ovis

#endif  // OVIS_MODELS_GAUSSIAN_HPP
