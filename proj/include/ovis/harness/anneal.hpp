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

#ifndef OVIS_HARNESS_ANNEAL_HPP
#define OVIS_HARNESS_ANNEAL_HPP

#include <cmath>
#include <string>

#include <ovis/errors.hpp>
#include <ovis/weights.hpp>

namespace ovis {

/// Geometric decay of alpha from `start` to `floor` over `anneal_steps`, then `end`.
struct AlphaSchedule {
  double start{0.99};
  double end{0.0};
  int anneal_steps{1};
  double floor{1e-3};

  void validate() const {
    detail::require(anneal_steps >= 1, "alpha schedule: anneal_steps must be positive");
    detail::require(floor > 0.0, "alpha schedule: floor must be positive");
    detail::require(start >= floor && start < 1.0, "alpha schedule: need floor <= start < 1");
    detail::validate_alpha(start);
    detail::validate_alpha(end);
  }
};

inline double anneal_alpha(int step, const AlphaSchedule& schedule) {
  schedule.validate();
  detail::require(step >= 0, "anneal_alpha: step must be non-negative, got " + std::to_string(step));
  if (step >= schedule.anneal_steps) {
    return schedule.end;
  }
  const double t = static_cast<double>(step) / static_cast<double>(schedule.anneal_steps);
  return schedule.start * std::pow(schedule.floor / schedule.start, t);
}

}  // namespace ovis

#endif  // OVIS_HARNESS_ANNEAL_HPP
