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


#ifndef OVIS_TESTS_SUPPORT_HPP
#define OVIS_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <ovis/ovis.hpp>

// Reference implementations used as oracles. Everything here is deliberately
// naive: linear-domain sums in long double, brute-force enumeration, central
// differences.
namespace ovis::testing {

using LongVec = std::vector<long double>;

inline std::vector<double> random_log_weights(std::mt19937_64& gen, std::size_t k, double spread = 3.0) {
  std::normal_distribution<double> n{0.0, spread};
  std::vector<double> out(k);
  for (double& v : out) {
    v = n(gen);
  }
  return out;
}

// v_k = w_k^(1-a) / sum_l w_l^(1-a), computed directly.
inline LongVec naive_normalized(std::span<const double> log_w, double alpha) {
  LongVec w(log_w.size());
  long double total = 0.0L;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::exp(static_cast<long double>(1.0 - alpha) * log_w[k]);
    total += w[k];
  }
  for (auto& v : w) {
    v /= total;
  }
  return w;
}

inline long double naive_bound(std::span<const double> log_w, double alpha) {
  const auto k = static_cast<long double>(log_w.size());
  if (alpha == 1.0) {
    long double s = 0.0L;
    for (double lw : log_w) {
      s += lw;
    }
    return s / k;
  }
  long double total = 0.0L;
  for (double lw : log_w) {
    total += std::exp(static_cast<long double>(1.0 - alpha) * lw);
  }
  return std::log(total / k) / static_cast<long double>(1.0 - alpha);
}

// d_k = bound - v_k
inline LongVec naive_prefactors(std::span<const double> log_w, double alpha) {
  const auto v = naive_normalized(log_w, alpha);
  const long double b = naive_bound(log_w, alpha);
  LongVec d(v.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = b - v[k];
  }
  return d;
}

// sum_{l != k} w_l in the linear domain, O(K^2).
inline long double naive_rest_sum(std::span<const double> log_w, std::size_t k) {
  long double s = 0.0L;
  for (std::size_t l = 0; l < log_w.size(); ++l) {
    if (l != k) {
      s += std::exp(static_cast<long double>(log_w[l]));
    }
  }
  return s;
}

// Control from the interpolated family at alpha = 0, evaluated directly:
// c_k = log((1/(K-1)) sum_{l!=k} w_l) - gamma v_k + (1 - gamma) log(1 - 1/K).
inline LongVec naive_gamma_controls(std::span<const double> log_w, double gamma) {
  const auto k_count = static_cast<long double>(log_w.size());
  const auto v = naive_normalized(log_w, 0.0);
  LongVec c(log_w.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] = std::log(naive_rest_sum(log_w, k) / (k_count - 1.0L)) - gamma * v[k] +
           (1.0L - gamma) * std::log(1.0L - 1.0L / k_count);
  }
  return c;
}

// Central differences of a scalar function of a parameter span, restoring each entry.
inline std::vector<double> central_difference(const std::function<double()>& f, std::span<double> params,
                                              double step) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + step;
    const double up = f();
    params[i] = keep - step;
    const double down = f();
    params[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// |a - b| <= rel * max(|a|, |b|, floor)
inline bool close_relative(double a, double b, double rel, double floor = 1.0) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), floor});
}

// L_K^alpha by summing over all C^K latent tuples of an enumerable model.
template <class M>
double brute_force_bound(const M& model, const typename M::observation_type& x, int K, double alpha) {
  const int c = model.latent_cardinality();
  std::vector<double> lq(static_cast<std::size_t>(c));
  std::vector<double> lw(static_cast<std::size_t>(c));
  for (int z = 0; z < c; ++z) {
    lq[static_cast<std::size_t>(z)] = model.log_q(x, z);
    lw[static_cast<std::size_t>(z)] = model.log_joint(x, z) - lq[static_cast<std::size_t>(z)];
  }
  std::vector<int> tuple(static_cast<std::size_t>(K), 0);
  std::vector<double> w(static_cast<std::size_t>(K));
  long double total = 0.0L;
  while (true) {
    long double log_prob = 0.0L;
    for (int k = 0; k < K; ++k) {
      log_prob += lq[static_cast<std::size_t>(tuple[k])];
      w[static_cast<std::size_t>(k)] = lw[static_cast<std::size_t>(tuple[k])];
    }
    total += std::exp(log_prob) * naive_bound(w, alpha);
    int pos = 0;
    while (pos < K && ++tuple[static_cast<std::size_t>(pos)] == c) {
      tuple[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == K) {
      break;
    }
  }
  return static_cast<double>(total);
}

// Streaming-free sample moments for MC comparisons.
struct Moments {
  std::vector<long double> sum;
  std::vector<long double> sum_sq;
  long double n{0.0L};

  void add(std::span<const double> g) {
    if (sum.empty()) {
      sum.assign(g.size(), 0.0L);
      sum_sq.assign(g.size(), 0.0L);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      sum[i] += g[i];
      sum_sq[i] += static_cast<long double>(g[i]) * g[i];
    }
    n += 1.0L;
  }
  [[nodiscard]] double mean(std::size_t i) const { return static_cast<double>(sum[i] / n); }
  [[nodiscard]] double variance(std::size_t i) const {
    const long double m = sum[i] / n;
    return static_cast<double>(std::max(0.0L, (sum_sq[i] - n * m * m) / (n - 1.0L)));
  }
  [[nodiscard]] double standard_error(std::size_t i) const { return std::sqrt(variance(i) / static_cast<double>(n)); }
  [[nodiscard]] double trace_variance() const {
    double t = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      t += variance(i);
    }
    return t;
  }
};

// Largest |mean - target| / SE over components; zero-variance components must match to 1e-9.
inline double worst_z(const Moments& m, std::span<const double> target) {
  double worst = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double se = m.standard_error(i);
    const double diff = std::abs(m.mean(i) - target[i]);
    if (se == 0.0) {
      worst = std::max(worst, diff <= 1e-9 * std::max(1.0, std::abs(target[i])) ? 0.0 : INFINITY);
    } else {
      worst = std::max(worst, diff / se);
    }
  }
  return worst;
}

// Largest |mean_a - mean_b| / sqrt(se_a^2 + se_b^2).
inline double worst_z(const Moments& a, const Moments& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.sum.size(); ++i) {
    const double se = std::hypot(a.standard_error(i), b.standard_error(i));
    const double diff = std::abs(a.mean(i) - b.mean(i));
    if (se == 0.0) {
      worst = std::max(worst, diff <= 1e-9 ? 0.0 : INFINITY);
    } else {
      worst = std::max(worst, diff / se);
    }
  }
  return worst;
}

struct EstimatorMoments {
  Moments phi;
  Moments theta;
};

template <class M>
EstimatorMoments run_replicates(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                                int n, std::uint64_t seed) {
  EstimatorMoments out;
  for (int r = 0; r < n; ++r) {
    RandomStream rng{seed, static_cast<std::uint64_t>(r)};
    const auto g = estimate(model, x, spec, rng);
    out.phi.add(g.phi_grad);
    if (g.theta_grad) {
      out.theta.add(*g.theta_grad);
    }
  }
  return out;
}

// Categorical q = softmax(phi) with log p(x, z) = log q(z) + theta[0]: every
// importance weight equals exp(theta[0]). No generative sampling, no pathwise.
class ConstantWeightModel {
 public:
  using observation_type = double;
  using latent_type = int;

  explicit ConstantWeightModel(int c, double log_weight = 0.7) : c_{c} {
    phi_.add_segment("logits", static_cast<std::size_t>(c));
    theta_.add_segment("offset", 1);
    for (int i = 0; i < c; ++i) {
      phi_.values()[static_cast<std::size_t>(i)] = 0.3 * i - 0.2;
    }
    theta_.values()[0] = log_weight;
  }

  [[nodiscard]] ModelCapabilities capabilities() const {
    return ModelCapabilities{.has_score = true, .has_pathwise = false, .enumerable_latent = c_,
                             .has_generative_sampling = false};
  }
  [[nodiscard]] int latent_cardinality() const { return c_; }
  [[nodiscard]] const ParameterVector& phi() const { return phi_; }
  [[nodiscard]] ParameterVector& phi() { return phi_; }
  [[nodiscard]] const ParameterVector& theta() const { return theta_; }
  [[nodiscard]] ParameterVector& theta() { return theta_; }

  [[nodiscard]] std::vector<double> probs() const {
    const auto lq = detail::log_softmax(phi_.values());
    std::vector<double> p(lq.size());
    std::transform(lq.begin(), lq.end(), p.begin(), [](double v) { return std::exp(v); });
    return p;
  }
  [[nodiscard]] int sample_q(double /*x*/, RandomStream& rng) const { return rng.categorical(probs()); }
  [[nodiscard]] double log_q(double /*x*/, int z) const {
    return detail::log_softmax(phi_.values())[static_cast<std::size_t>(z)];
  }
  [[nodiscard]] double log_joint(double x, int z) const { return log_q(x, z) + theta_.values()[0]; }
  [[nodiscard]] std::vector<double> score(double x, int z) const {
    std::vector<double> out(phi_.size(), 0.0);
    const double one = 1.0;
    accumulate_scores(x, std::span<const int>{&z, 1}, std::span<const double>{&one, 1}, out);
    return out;
  }
  void accumulate_scores(double /*x*/, std::span<const int> zs, std::span<const double> coefs,
                         std::span<double> out) const {
    const auto p = probs();
    for (std::size_t k = 0; k < zs.size(); ++k) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        out[i] += coefs[k] * ((static_cast<int>(i) == zs[k] ? 1.0 : 0.0) - p[i]);
      }
    }
  }
  void accumulate_theta_gradients(double /*x*/, std::span<const int> zs, std::span<const double> coefs,
                                  std::span<double> out) const {
    for (std::size_t k = 0; k < zs.size(); ++k) {
      out[0] += coefs[k];
    }
  }

 private:
  int c_;
  ParameterVector phi_;
  ParameterVector theta_;
};

}  // namespace ovis::testing

#endif  // OVIS_TESTS_SUPPORT_HPP
