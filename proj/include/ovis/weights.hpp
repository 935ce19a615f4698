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

#ifndef OVIS_WEIGHTS_HPP
#define OVIS_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <ovis/errors.hpp>

/**
 * \file
 * \brief Log-space algebra over importance weights.
 *
 * Everything here works on log-weights log w_k. The Renyi parameter alpha tempers
 * the weights to w_k^(1 - alpha); alpha = 0 is the plain importance weighted bound
 * and alpha = 1 is the ELBO, handled through its analytic limit.
 */

namespace ovis {

/// Values of alpha in (1 - kAlphaLimitGap, 1) are rejected: the (1 - alpha)^-1
/// prefactor cancels catastrophically there and alpha = 1 has an exact branch.
inline constexpr double kAlphaLimitGap = 1e-6;

/// log(exp(a) + exp(b)), accepting -inf operands.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) {
    return b;
  }
  if (b == -std::numeric_limits<double>::infinity()) {
    return a;
  }
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

/// Numerically stable log(sum(exp(values))).
inline double log_sum_exp(std::span<const double> values) {
  detail::require(!values.empty(), "log_sum_exp: empty input");
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) {
      throw InvalidArgument("log_sum_exp: NaN input");
    }
    hi = std::max(hi, v);
  }
  if (!std::isfinite(hi)) {
    return hi;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += std::exp(v - hi);
  }
  return hi + std::log(sum);
}

namespace detail {

// Leave-one-out log-sum-exp from prefix and suffix accumulations. Entry k never
// reads values[k], so it is bit-identical under any change of that entry.
inline std::vector<double> leave_one_out_log_sum_exp(std::span<const double> values) {
  const std::size_t n = values.size();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> prefix(n + 1, kNegInf);
  std::vector<double> suffix(n + 1, kNegInf);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = log_add_exp(prefix[i], values[i]);
  }
  for (std::size_t i = n; i-- > 0;) {
    suffix[i] = log_add_exp(suffix[i + 1], values[i]);
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = log_add_exp(prefix[k], suffix[k + 1]);
  }
  return out;
}

// Same construction for plain sums.
inline std::vector<double> leave_one_out_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> prefix(n + 1, 0.0);
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + values[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    suffix[i] = suffix[i + 1] + values[i];
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = prefix[k] + suffix[k + 1];
  }
  return out;
}

inline void validate_alpha(double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1], got " + std::to_string(alpha));
  if (alpha < 1.0 && alpha > 1.0 - kAlphaLimitGap) {
    throw Unsupported("alpha in (1 - 1e-6, 1) is numerically unstable; use alpha = 1 for the ELBO limit");
  }
}

}  // namespace detail

/// The K log importance weights of one datapoint together with their normalized form.
class WeightSet {
 public:
  WeightSet(std::vector<double> log_w, double alpha) : log_w_{std::move(log_w)}, alpha_{alpha} {
    detail::require(!log_w_.empty(), "WeightSet: need at least one weight");
    for (double lw : log_w_) {
      if (!std::isfinite(lw)) {
        throw NonFiniteError("WeightSet: log-weights must be finite");
      }
    }
    detail::validate_alpha(alpha_);

    const double scale = 1.0 - alpha_;
    tempered_.resize(log_w_.size());
    std::transform(log_w_.begin(), log_w_.end(), tempered_.begin(), [scale](double lw) { return scale * lw; });
    log_total_ = log_sum_exp(tempered_);
    v_.resize(log_w_.size());
    std::transform(tempered_.begin(), tempered_.end(), v_.begin(), [this](double t) { return std::exp(t - log_total_); });
  }

  [[nodiscard]] std::size_t size() const { return log_w_.size(); }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] bool is_elbo_limit() const { return alpha_ == 1.0; }

  [[nodiscard]] std::span<const double> log_weights() const { return log_w_; }

  /// (1 - alpha) log w_k.
  [[nodiscard]] std::span<const double> tempered_log_weights() const { return tempered_; }

  /// v_k(alpha) = w_k^(1-alpha) / sum_l w_l^(1-alpha).
  [[nodiscard]] std::span<const double> normalized() const { return v_; }
  [[nodiscard]] double normalized(std::size_t k) const { return v_[k]; }

  /// log Z_K(alpha) = log (1/K) sum_k w_k^(1-alpha).
  [[nodiscard]] double log_z() const { return log_total_ - std::log(static_cast<double>(size())); }

  /// Single-sample estimate of the bound: (1 - alpha)^-1 log Z_K(alpha), or the mean
  /// log-weight in the alpha = 1 limit.
  [[nodiscard]] double bound() const {
    if (is_elbo_limit()) {
      return std::accumulate(log_w_.begin(), log_w_.end(), 0.0) / static_cast<double>(size());
    }
    return log_z() / (1.0 - alpha_);
  }

  /// Score-function prefactor d_k(alpha) = bound - v_k(alpha).
  [[nodiscard]] double prefactor(std::size_t k) const { return bound() - v_[k]; }

  [[nodiscard]] std::vector<double> prefactors() const {
    const double b = bound();
    std::vector<double> d(size());
    std::transform(v_.begin(), v_.end(), d.begin(), [b](double v) { return b - v; });
    return d;
  }

 private:
  std::vector<double> log_w_;
  double alpha_;
  std::vector<double> tempered_;
  double log_total_{};
  std::vector<double> v_;
};

/// Effective sample size 1 / sum_k v_k(alpha)^2, in [1, K].
inline double ess(const WeightSet& ws) {
  double sum_sq = 0.0;
  for (double v : ws.normalized()) {
    sum_sq += v * v;
  }
  return 1.0 / sum_sq;
}

/// Leave-one-out normalizers, all in log-space and over the tempered weights
/// w^(1-alpha) (identical to the raw weights at alpha = 0).
struct LeaveOneOut {
  /// log Z~_[-k] = log (1/K) sum_{l != k} w_l.
  std::vector<double> log_z_tilde;
  /// log Z^_[-k] with the held-out weight replaced by the arithmetic mean of the others.
  std::vector<double> log_z_hat_arith;
  /// Same, replacing it with the geometric mean of the others.
  std::vector<double> log_z_hat_geom;
};

/// Every entry k depends only on the weights l != k (O(K) total).
inline LeaveOneOut leave_one_out(const WeightSet& ws) {
  const std::size_t n = ws.size();
  detail::require(n >= 2, "leave_one_out: needs K >= 2");
  const auto t = ws.tempered_log_weights();
  const auto lse_rest = detail::leave_one_out_log_sum_exp(t);
  const auto sum_rest = detail::leave_one_out_sum(t);
  const double log_k = std::log(static_cast<double>(n));
  const double log_k1 = std::log(static_cast<double>(n - 1));

  LeaveOneOut out;
  out.log_z_tilde.resize(n);
  out.log_z_hat_arith.resize(n);
  out.log_z_hat_geom.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.log_z_tilde[k] = lse_rest[k] - log_k;
    // (1/K)(S + S/(K-1)) = S/(K-1)
    out.log_z_hat_arith[k] = lse_rest[k] - log_k1;
    out.log_z_hat_geom[k] = log_add_exp(lse_rest[k], sum_rest[k] / static_cast<double>(n - 1)) - log_k;
  }
  return out;
}

}  // namespace ovis

#endif  // OVIS_WEIGHTS_HPP
