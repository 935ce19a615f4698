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

#ifndef OVIS_HARNESS_SELFTEST_HPP
#define OVIS_HARNESS_SELFTEST_HPP

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <ovis/diagnostics/exact.hpp>
#include <ovis/diagnostics/stats.hpp>
#include <ovis/estimators/dispatch.hpp>
#include <ovis/harness/csv.hpp>
#include <ovis/models/gmm.hpp>

namespace ovis {

struct SelftestOptions {
  int n_mc{20000};
  std::uint64_t seed{0};
  /// Allowed deviation from the exact gradient, in standard errors.
  double tolerance_se{4.0};
  int threads{1};
};

/// Largest |MC mean - exact| / SE over the components; components with zero spread must match exactly.
inline double worst_standard_score(const GradientStats& stats, const std::vector<double>& exact) {
  double worst = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double se = std::sqrt(stats.variance[i] / static_cast<double>(stats.n_replicates));
    const double diff = std::abs(stats.mean[i] - exact[i]);
    if (se > 0.0) {
      worst = std::max(worst, diff / se);
    } else if (diff > 1e-12 * (1.0 + std::abs(exact[i]))) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

/// Every unbiased score-function estimator against the enumerated gradient on a
/// three-cluster GMM with K = 2. Writes one line per estimator; true when all pass.
inline bool run_selftest(std::ostream& log, const SelftestOptions& options = {}) {
  const int clusters = 3;
  const int k = 2;
  const auto model = gmm_make(clusters, 7);
  const double x = 12.0;
  const auto exact = exact_iwae_gradient(model, x, k, 0.0);
  const std::vector<EstimatorSpec> specs{EstimatorSpec::reinforce(k),    EstimatorSpec::vimco(k),
                                         EstimatorSpec::vimco(k, true),  EstimatorSpec::ovis_mc(k, 1),
                                         EstimatorSpec::ovis_mc(k, 5),   EstimatorSpec::ovis_gamma(k, 0.0),
                                         EstimatorSpec::exact_ocv(k)};
  bool ok = true;
  for (const auto& spec : specs) {
    const auto stats = gradient_stats(model, x, spec, options.n_mc, options.seed, options.threads);
    const double phi_score = worst_standard_score(stats.phi, exact.phi_grad);
    const double theta_score = worst_standard_score(*stats.theta, exact.theta_grad);
    const bool pass = phi_score <= options.tolerance_se && theta_score <= options.tolerance_se;
    ok = ok && pass;
    std::string label{to_string(spec.kind)};
    if (spec.S) {
      label += " S=" + std::to_string(*spec.S);
    }
    if (spec.gamma) {
      label += " gamma=" + format_number(*spec.gamma);
    }
    log << (pass ? "PASS " : "FAIL ") << label << ": max |mean - exact| = " << format_number(phi_score)
        << " SE (phi), " << format_number(theta_score) << " SE (theta), n_mc=" << options.n_mc << '\n';
  }
  return ok;
}

}  // namespace ovis

#endif  // OVIS_HARNESS_SELFTEST_HPP
