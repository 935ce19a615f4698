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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/weights.hpp>

#include "support.hpp"

namespace {

using ovis::WeightSet;
using ovis::testing::naive_normalized;
using ovis::testing::naive_prefactors;
using ovis::testing::random_log_weights;

constexpr int kCases = 1000;

TEST(LogSumExp, TwoZeros) { EXPECT_NEAR(ovis::log_sum_exp(std::vector<double>{0.0, 0.0}), std::log(2.0), 1e-15); }

TEST(LogSumExp, Singleton) { EXPECT_EQ(ovis::log_sum_exp(std::vector<double>{-3.25}), -3.25); }

TEST(LogSumExp, LargeValuesDoNotOverflow) {
  EXPECT_NEAR(ovis::log_sum_exp(std::vector<double>{1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
}

TEST(LogSumExp, RejectsEmptyAndNan) {
  EXPECT_THROW((void)ovis::log_sum_exp(std::vector<double>{}), ovis::Error);
  EXPECT_THROW((void)ovis::log_sum_exp(std::vector<double>{0.0, std::nan("")}), ovis::Error);
}

TEST(LogSumExp, ShiftInvariant) {
  std::mt19937_64 gen{1};
  std::uniform_real_distribution<double> shift{-500.0, 500.0};
  for (int c = 0; c < kCases; ++c) {
    auto v = random_log_weights(gen, 1 + c % 9);
    const double s = shift(gen);
    const double base = ovis::log_sum_exp(v);
    for (double& x : v) {
      x += s;
    }
    ASSERT_NEAR(ovis::log_sum_exp(v), base + s, 1e-12 * std::max(1.0, std::abs(base + s)));
  }
}

TEST(WeightSet, EqualWeights) {
  const WeightSet ws{{0.0, 0.0, 0.0, 0.0}, 0.0};
  EXPECT_NEAR(ws.log_z(), 0.0, 1e-15);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(ws.normalized(k), 0.25, 1e-15);
    EXPECT_NEAR(ws.prefactor(k), -0.25, 1e-15);
  }
}

TEST(WeightSet, OneAndThree) {
  const WeightSet ws{{0.0, std::log(3.0)}, 0.0};
  EXPECT_NEAR(std::exp(ws.log_z()), 2.0, 1e-14);
  EXPECT_NEAR(ws.normalized(0), 0.25, 1e-15);
  EXPECT_NEAR(ws.normalized(1), 0.75, 1e-15);
}

TEST(WeightSet, ElboLimitGivesUniformWeights) {
  std::mt19937_64 gen{2};
  for (int c = 0; c < 100; ++c) {
    const auto lw = random_log_weights(gen, 2 + c % 7, 10.0);
    const WeightSet ws{lw, 1.0};
    for (std::size_t k = 0; k < lw.size(); ++k) {
      ASSERT_DOUBLE_EQ(ws.normalized(k), 1.0 / static_cast<double>(lw.size()));
    }
    const double mean = std::accumulate(lw.begin(), lw.end(), 0.0) / static_cast<double>(lw.size());
    ASSERT_NEAR(ws.bound(), mean, 1e-12);
  }
}

TEST(WeightSet, RejectsBadInput) {
  EXPECT_THROW((WeightSet{{0.0}, -0.1}), ovis::InvalidArgument);
  EXPECT_THROW((WeightSet{{0.0}, 1.5}), ovis::InvalidArgument);
  EXPECT_THROW((WeightSet{{0.0, std::numeric_limits<double>::infinity()}, 0.0}), ovis::Error);
  EXPECT_THROW((WeightSet{{std::nan("")}, 0.0}), ovis::Error);
  EXPECT_THROW((WeightSet{{}, 0.0}), ovis::Error);
  EXPECT_THROW((WeightSet{{0.0, 1.0}, 1.0 - 1e-7}), ovis::Unsupported);
}

TEST(WeightSet, MatchesDirectFormulas) {
  std::mt19937_64 gen{3};
  std::uniform_real_distribution<double> alpha{0.0, 0.99};
  for (int c = 0; c < kCases; ++c) {
    const auto lw = random_log_weights(gen, 1 + c % 12);
    const double a = c % 5 == 0 ? 0.0 : alpha(gen);
    const WeightSet ws{lw, a};
    const auto v = naive_normalized(lw, a);
    const auto d = naive_prefactors(lw, a);
    for (std::size_t k = 0; k < lw.size(); ++k) {
      ASSERT_NEAR(ws.normalized(k), static_cast<double>(v[k]), 1e-12);
      ASSERT_NEAR(ws.prefactor(k), static_cast<double>(d[k]), 1e-10);
    }
  }
}

TEST(WeightSet, PrefactorsApproachTheElboLimit) {
  const std::vector<double> lw{-1.0, 0.5, 2.0};
  const WeightSet limit{lw, 1.0};
  const WeightSet near{lw, 1.0 - 1e-5};
  for (std::size_t k = 0; k < lw.size(); ++k) {
    EXPECT_NEAR(near.prefactor(k), limit.prefactor(k), 1e-4);
  }
}

TEST(Ess, Examples) {
  EXPECT_NEAR(ovis::ess(WeightSet{{0.0, 0.0, 0.0, 0.0}, 0.0}), 4.0, 1e-12);
  const double big = 1e6;
  const double expect = (big + 1) * (big + 1) / (big * big + 1);
  EXPECT_NEAR(ovis::ess(WeightSet{{std::log(big), 0.0}, 0.0}), expect, 1e-12);
  EXPECT_NEAR(ovis::ess(WeightSet{{std::log(big), 0.0}, 0.0}), 1.000002, 1e-6);
  EXPECT_NEAR(ovis::ess(WeightSet{{0.0, std::log(3.0)}, 0.0}), 1.6, 1e-12);
}

TEST(LeaveOneOut, OneAndThree) {
  const WeightSet ws{{0.0, std::log(3.0)}, 0.0};
  const auto loo = ovis::leave_one_out(ws);
  EXPECT_NEAR(std::exp(loo.log_z_tilde[0]), 1.5, 1e-14);
  EXPECT_NEAR(std::exp(loo.log_z_hat_arith[0]), 3.0, 1e-14);
  EXPECT_NEAR(std::exp(loo.log_z_tilde[1]), 0.5, 1e-14);
  EXPECT_NEAR(std::exp(loo.log_z_hat_arith[1]), 1.0, 1e-14);
}

TEST(LeaveOneOut, EqualWeightsReproduceTheNormalizer) {
  const double c = 1.7;
  const WeightSet ws{{c, c, c, c, c}, 0.0};
  const auto loo = ovis::leave_one_out(ws);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(ws.log_z() - loo.log_z_hat_arith[k], 0.0, 1e-14);
    EXPECT_NEAR(loo.log_z_hat_geom[k], loo.log_z_hat_arith[k], 1e-14);
  }
}

TEST(LeaveOneOut, RejectsSingleParticle) { EXPECT_THROW((void)ovis::leave_one_out(WeightSet{{0.0}, 0.0}), ovis::Error); }

TEST(LeaveOneOut, MatchesQuadraticOracle) {
  std::mt19937_64 gen{4};
  for (int c = 0; c < kCases; ++c) {
    const std::size_t k_count = 2 + static_cast<std::size_t>(c % 10);
    const auto lw = random_log_weights(gen, k_count);
    const auto loo = ovis::leave_one_out(WeightSet{lw, 0.0});
    const auto kf = static_cast<long double>(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const long double rest = ovis::testing::naive_rest_sum(lw, k);
      long double log_rest = 0.0L;
      for (std::size_t l = 0; l < k_count; ++l) {
        if (l != k) {
          log_rest += lw[l];
        }
      }
      const long double geo = std::exp(log_rest / (kf - 1.0L));
      ASSERT_NEAR(loo.log_z_tilde[k], static_cast<double>(std::log(rest / kf)), 1e-12);
      ASSERT_NEAR(loo.log_z_hat_arith[k], static_cast<double>(std::log((rest + rest / (kf - 1.0L)) / kf)), 1e-12);
      ASSERT_NEAR(loo.log_z_hat_geom[k], static_cast<double>(std::log((rest + geo) / kf)), 1e-12);
    }
  }
}

TEST(LeaveOneOut, EntryNeverReadsItsOwnWeight) {
  std::mt19937_64 gen{5};
  for (int c = 0; c < 200; ++c) {
    auto lw = random_log_weights(gen, 2 + c % 6);
    const std::size_t k = static_cast<std::size_t>(c) % lw.size();
    const auto before = ovis::leave_one_out(WeightSet{lw, 0.0});
    lw[k] += 3.0;
    const auto after = ovis::leave_one_out(WeightSet{lw, 0.0});
    ASSERT_EQ(before.log_z_tilde[k], after.log_z_tilde[k]);
    ASSERT_EQ(before.log_z_hat_arith[k], after.log_z_hat_arith[k]);
    ASSERT_EQ(before.log_z_hat_geom[k], after.log_z_hat_geom[k]);
  }
}

TEST(LeaveOneOut, WideDynamicRangeStaysFinite) {
  const std::vector<double> lw{-700.0, 0.0, 700.0, 650.0};
  const auto loo = ovis::leave_one_out(WeightSet{lw, 0.0});
  for (std::size_t k = 0; k < lw.size(); ++k) {
    EXPECT_TRUE(std::isfinite(loo.log_z_tilde[k]));
    EXPECT_TRUE(std::isfinite(loo.log_z_hat_geom[k]));
  }
  EXPECT_NEAR(loo.log_z_tilde[2], 650.0 - std::log(4.0), 1e-9);
}

// Randomized invariants.

TEST(WeightInvariants, PermutationEquivariance) {
  std::mt19937_64 gen{6};
  for (int c = 0; c < kCases; ++c) {
    auto lw = random_log_weights(gen, 2 + c % 9);
    std::vector<std::size_t> perm(lw.size());
    std::iota(perm.begin(), perm.end(), 0U);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> shuffled(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) {
      shuffled[i] = lw[perm[i]];
    }
    const WeightSet a{lw, 0.0};
    const WeightSet b{shuffled, 0.0};
    const auto la = ovis::leave_one_out(a);
    const auto lb = ovis::leave_one_out(b);
    ASSERT_NEAR(a.log_z(), b.log_z(), 1e-12);
    ASSERT_NEAR(ovis::ess(a), ovis::ess(b), 1e-9);
    for (std::size_t i = 0; i < lw.size(); ++i) {
      ASSERT_NEAR(b.normalized(i), a.normalized(perm[i]), 1e-14);
      ASSERT_NEAR(b.prefactor(i), a.prefactor(perm[i]), 1e-12);
      ASSERT_NEAR(lb.log_z_tilde[i], la.log_z_tilde[perm[i]], 1e-12);
    }
  }
}

TEST(WeightInvariants, ShiftInvariance) {
  std::mt19937_64 gen{7};
  std::uniform_real_distribution<double> shift{-300.0, 300.0};
  for (int c = 0; c < kCases; ++c) {
    auto lw = random_log_weights(gen, 1 + c % 9);
    const WeightSet a{lw, 0.0};
    const double s = shift(gen);
    for (double& x : lw) {
      x += s;
    }
    const WeightSet b{lw, 0.0};
    ASSERT_NEAR(b.log_z(), a.log_z() + s, 1e-12 * std::max(1.0, std::abs(s)));
    ASSERT_NEAR(ovis::ess(a), ovis::ess(b), 1e-9);
    for (std::size_t i = 0; i < lw.size(); ++i) {
      ASSERT_NEAR(a.normalized(i), b.normalized(i), 1e-12);
      ASSERT_NEAR(a.prefactor(i) - a.bound(), b.prefactor(i) - b.bound(), 1e-12);
    }
  }
}

TEST(WeightInvariants, EssWithinRange) {
  std::mt19937_64 gen{8};
  std::uniform_real_distribution<double> alpha{0.0, 0.999};
  for (int c = 0; c < kCases; ++c) {
    const auto lw = random_log_weights(gen, 1 + c % 20, 1.0 + c % 30);
    const WeightSet ws{lw, alpha(gen)};
    const double e = ovis::ess(ws);
    ASSERT_GE(e, 1.0 - 1e-12);
    ASSERT_LE(e, static_cast<double>(lw.size()) + 1e-9);
  }
}

TEST(WeightInvariants, RenyiEssIsMonotoneAndReachesK) {
  std::mt19937_64 gen{9};
  for (int c = 0; c < kCases; ++c) {
    const auto lw = random_log_weights(gen, 2 + c % 10);
    double previous = 0.0;
    for (double a : {0.0, 0.25, 0.5, 0.75, 0.99}) {
      const double e = ovis::ess(WeightSet{lw, a});
      ASSERT_GE(e, previous - 1e-9);
      previous = e;
    }
    ASSERT_NEAR(ovis::ess(WeightSet{lw, 1.0}), static_cast<double>(lw.size()), 1e-9);
  }
}

}  // namespace
