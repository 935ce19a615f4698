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

#ifndef OVIS_DIAGNOSTICS_SLOPE_HPP
#define OVIS_DIAGNOSTICS_SLOPE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <ovis/errors.hpp>

namespace ovis {

struct SlopeFit {
  double slope{0.0};
  double intercept{0.0};
  double r2{0.0};
  /// (log10 K, log10 y)
  std::vector<std::pair<double, double>> points;
};

/// Ordinary least squares of log10 y on log10 K.
inline SlopeFit loglog_slope(std::span<const double> ks, std::span<const double> ys) {
  detail::require(ks.size() == ys.size(), "loglog_slope: size mismatch");
  detail::require(ks.size() >= 3, "loglog_slope: need at least three points");
  SlopeFit fit;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    detail::require(std::isfinite(ys[i]) && ys[i] > 0.0, "loglog_slope: y values must be positive and finite");
    detail::require(ks[i] > 0.0, "loglog_slope: K values must be positive");
    detail::require(i == 0 || ks[i] > ks[i - 1], "loglog_slope: K values must be strictly increasing");
    fit.points.emplace_back(std::log10(ks[i]), std::log10(ys[i]));
  }
  const double n = static_cast<double>(fit.points.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : fit.points) {
    mx += x / n;
    my += y / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace ovis

#endif  // OVIS_DIAGNOSTICS_SLOPE_HPP
