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

#ifndef OVIS_ADAM_HPP
#define OVIS_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <ovis/errors.hpp>

namespace ovis {

struct AdamState {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step{0};

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate) : lr{learning_rate}, m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam step. Gradient *ascent*: the step is added.
inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state) {
  detail::require(params.size() == grad.size(), "adam_step: parameter and gradient sizes differ");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  detail::require(state.m.size() == params.size() && state.v.size() == params.size(),
                  "adam_step: optimizer state has the wrong size");
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw NonFiniteError("adam_step: non-finite gradient");
    }
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] += state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace ovis

#endif  // OVIS_ADAM_HPP
