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

#ifndef OVIS_ESTIMATORS_SPEC_HPP
#define OVIS_ESTIMATORS_SPEC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/weights.hpp>

namespace ovis {

enum class EstimatorKind {
  kReinforce,
  kVimcoArith,
  kVimcoGeom,
  kOvisMc,
  kOvisGamma,
  kExactOcv,
  kRwsWakePhi,
  kRwsSleepPhi,
  kTvo,
  kPathwiseIwae,
  kStl,
  kDreg,
};

namespace detail {

struct KindName {
  EstimatorKind kind;
  std::string_view name;
};

inline constexpr std::array<KindName, 12> kKindNames{{
    {EstimatorKind::kReinforce, "reinforce"},
    {EstimatorKind::kVimcoArith, "vimco-arith"},
    {EstimatorKind::kVimcoGeom, "vimco-geom"},
    {EstimatorKind::kOvisMc, "ovis-mc"},
    {EstimatorKind::kOvisGamma, "ovis-gamma"},
    {EstimatorKind::kExactOcv, "exact-ocv"},
    {EstimatorKind::kRwsWakePhi, "rws-wake-phi"},
    {EstimatorKind::kRwsSleepPhi, "rws-sleep-phi"},
    {EstimatorKind::kTvo, "tvo"},
    {EstimatorKind::kPathwiseIwae, "pathwise-iwae"},
    {EstimatorKind::kStl, "stl"},
    {EstimatorKind::kDreg, "dreg"},
}};

}  // namespace detail

inline std::string_view to_string(EstimatorKind kind) {
  for (const auto& entry : detail::kKindNames) {
    if (entry.kind == kind) {
      return entry.name;
    }
  }
  return "unknown";
}

/// Accepts hyphens or underscores; "vimco" means arithmetic averaging.
inline EstimatorKind parse_estimator_kind(std::string_view text) {
  std::string name{text};
  std::replace(name.begin(), name.end(), '_', '-');
  if (name == "vimco") {
    return EstimatorKind::kVimcoArith;
  }
  for (const auto& entry : detail::kKindNames) {
    if (entry.name == name) {
      return entry.kind;
    }
  }
  throw InvalidArgument("unknown estimator: " + std::string{text});
}

/// Default clip for normalized weights in the OVIS-gamma factorization (float32 machine epsilon).
inline constexpr double kDefaultClipEps = 1.19e-7;

/// Left-endpoint TVO partition: 0 followed by `points` log-uniformly spaced values in [beta1, 1].
inline std::vector<double> tvo_log_uniform_partition(int points, double beta1) {
  detail::require(points >= 1, "tvo partition: need at least one point");
  detail::require(beta1 > 0.0 && beta1 <= 1.0, "tvo partition: beta1 must lie in (0, 1]");
  std::vector<double> partition{0.0};
  if (points == 1) {
    partition.push_back(1.0);
    return partition;
  }
  const double lo = std::log10(beta1);
  for (int i = 0; i < points; ++i) {
    partition.push_back(std::pow(10.0, lo * (1.0 - static_cast<double>(i) / (points - 1))));
  }
  partition.back() = 1.0;
  return partition;
}

/// Which estimator to run and its hyperparameters.
struct EstimatorSpec {
  EstimatorKind kind{EstimatorKind::kReinforce};
  int K{1};
  double alpha{0.0};
  /// ovis-gamma only.
  std::optional<double> gamma;
  /// ovis-mc only: auxiliary samples.
  std::optional<int> S;
  double clip_eps{kDefaultClipEps};
  /// tvo only: sorted, starts at 0, ends at 1.
  std::vector<double> tvo_partition;

  /// Throws InvalidArgument/Unsupported if the fields do not fit the kind.
  void validate() const {
    detail::require(K >= 1, "estimator: K must be positive");
    detail::validate_alpha(alpha);
    detail::require(clip_eps >= 0.0 && clip_eps < 1.0, "estimator: clip_eps must lie in [0, 1)");
    const bool wants_gamma = kind == EstimatorKind::kOvisGamma;
    const bool wants_s = kind == EstimatorKind::kOvisMc;
    const bool wants_partition = kind == EstimatorKind::kTvo;
    detail::require(gamma.has_value() == wants_gamma,
                    wants_gamma ? "ovis-gamma requires gamma" : "gamma is only valid for ovis-gamma");
    detail::require(S.has_value() == wants_s, wants_s ? "ovis-mc requires S" : "S is only valid for ovis-mc");
    detail::require(tvo_partition.empty() != wants_partition,
                    wants_partition ? "tvo requires a partition" : "a partition is only valid for tvo");
    if (gamma) {
      detail::require(*gamma >= 0.0 && *gamma <= 1.0, "estimator: gamma must lie in [0, 1]");
    }
    if (S) {
      detail::require(*S >= 1, "estimator: S must be at least 1");
    }
    if (wants_partition) {
      detail::require(tvo_partition.size() >= 2, "tvo: partition needs at least two points");
      detail::require(tvo_partition.front() == 0.0 && tvo_partition.back() == 1.0,
                      "tvo: partition must start at 0 and end at 1");
      for (std::size_t i = 1; i < tvo_partition.size(); ++i) {
        detail::require(tvo_partition[i] > tvo_partition[i - 1], "tvo: partition must be strictly increasing");
      }
    }
    switch (kind) {
      case EstimatorKind::kVimcoArith:
      case EstimatorKind::kVimcoGeom:
      case EstimatorKind::kOvisGamma:
      case EstimatorKind::kTvo:
        detail::require(K >= 2, std::string{to_string(kind)} + " requires K >= 2");
        break;
      default:
        break;
    }
    switch (kind) {
      case EstimatorKind::kVimcoArith:
      case EstimatorKind::kVimcoGeom:
      case EstimatorKind::kRwsSleepPhi:
      case EstimatorKind::kTvo:
      case EstimatorKind::kStl:
      case EstimatorKind::kDreg:
        if (alpha != 0.0) {
          throw Unsupported(std::string{to_string(kind)} + " is only implemented for alpha = 0");
        }
        break;
      default:
        break;
    }
  }

  static EstimatorSpec of_kind(EstimatorKind kind, int k, double a = 0.0) {
    EstimatorSpec spec;
    spec.kind = kind;
    spec.K = k;
    spec.alpha = a;
    return spec;
  }
  static EstimatorSpec reinforce(int k, double a = 0.0) { return of_kind(EstimatorKind::kReinforce, k, a); }
  static EstimatorSpec vimco(int k, bool geometric = false) {
    return of_kind(geometric ? EstimatorKind::kVimcoGeom : EstimatorKind::kVimcoArith, k);
  }
  static EstimatorSpec ovis_mc(int k, int s, double a = 0.0) {
    auto spec = of_kind(EstimatorKind::kOvisMc, k, a);
    spec.S = s;
    return spec;
  }
  static EstimatorSpec ovis_gamma(int k, double g, double a = 0.0) {
    auto spec = of_kind(EstimatorKind::kOvisGamma, k, a);
    spec.gamma = g;
    return spec;
  }
  static EstimatorSpec exact_ocv(int k, double a = 0.0) { return of_kind(EstimatorKind::kExactOcv, k, a); }
  static EstimatorSpec tvo(int k, std::vector<double> partition) {
    auto spec = of_kind(EstimatorKind::kTvo, k);
    spec.tvo_partition = std::move(partition);
    return spec;
  }
};

}  // namespace ovis

#endif  // OVIS_ESTIMATORS_SPEC_HPP
