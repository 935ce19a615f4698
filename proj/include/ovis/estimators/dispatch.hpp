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

#ifndef OVIS_ESTIMATORS_DISPATCH_HPP
#define OVIS_ESTIMATORS_DISPATCH_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/estimators/estimate.hpp>
#include <ovis/estimators/exact_ocv.hpp>
#include <ovis/estimators/pathwise.hpp>
#include <ovis/estimators/score_function.hpp>
#include <ovis/estimators/spec.hpp>
#include <ovis/estimators/tvo.hpp>
#include <ovis/models/model.hpp>
#include <ovis/rng.hpp>

namespace ovis {

/// One estimate for datapoint x. Sleep-phase updates ignore x.
template <ScoreModel M>
GradientEstimate estimate(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                          RandomStream& rng) {
  spec.validate();
  switch (spec.kind) {
    case EstimatorKind::kReinforce:
      return reinforce(model, x, spec, rng);
    case EstimatorKind::kVimcoArith:
    case EstimatorKind::kVimcoGeom:
      return vimco(model, x, spec, rng);
    case EstimatorKind::kOvisMc:
      return ovis_mc(model, x, spec, rng);
    case EstimatorKind::kOvisGamma:
      return ovis_gamma(model, x, spec, rng);
    case EstimatorKind::kExactOcv:
      return exact_optimal_cv(model, x, spec, rng);
    case EstimatorKind::kRwsWakePhi:
      return rws_wake_phi(model, x, spec, rng);
    case EstimatorKind::kRwsSleepPhi:
      return rws_sleep_phi(model, spec, rng);
    case EstimatorKind::kTvo:
      return tvo_gradient(model, x, spec, rng);
    case EstimatorKind::kPathwiseIwae:
      return pathwise_gradient(model, x, spec, PathwiseVariant::kIwae, rng);
    case EstimatorKind::kStl:
      return pathwise_gradient(model, x, spec, PathwiseVariant::kStl, rng);
    case EstimatorKind::kDreg:
      return pathwise_gradient(model, x, spec, PathwiseVariant::kDreg, rng);
  }
  throw InvalidArgument("estimate: unknown estimator kind");
}

/// Mean estimate over a batch; datapoint i uses the child stream rng.split(i).
template <ScoreModel M>
GradientEstimate estimate_batch(const M& model, std::span<const typename M::observation_type> xs,
                                const EstimatorSpec& spec, RandomStream& rng) {
  detail::require(!xs.empty(), "estimate_batch: empty batch");
  GradientEstimate total;
  const double scale = 1.0 / static_cast<double>(xs.size());
  double ess_sum = 0.0;
  double log_z_sum = 0.0;
  double bound_sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto child = rng.split(i);
    const auto one = estimate(model, xs[i], spec, child);
    if (i == 0) {
      total.phi_grad.assign(one.phi_grad.size(), 0.0);
      if (one.theta_grad) {
        total.theta_grad = std::vector<double>(one.theta_grad->size(), 0.0);
      }
    }
    for (std::size_t j = 0; j < one.phi_grad.size(); ++j) {
      total.phi_grad[j] += scale * one.phi_grad[j];
    }
    if (total.theta_grad && one.theta_grad) {
      for (std::size_t j = 0; j < one.theta_grad->size(); ++j) {
        (*total.theta_grad)[j] += scale * (*one.theta_grad)[j];
      }
    }
    ess_sum += one.aux.ess;
    log_z_sum += one.aux.log_z;
    bound_sum += one.aux.bound;
  }
  total.aux.ess = ess_sum * scale;
  total.aux.log_z = log_z_sum * scale;
  total.aux.bound = bound_sum * scale;
  return total;
}

}  // namespace ovis

#endif  // OVIS_ESTIMATORS_DISPATCH_HPP
