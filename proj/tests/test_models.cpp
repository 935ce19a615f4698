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

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <ovis/ovis.hpp>

#include "checks.hpp"
#include "support.hpp"

namespace {

using ovis::GaussianToyModel;
using ovis::RandomStream;

TEST(ParameterVector, SegmentsPartitionTheVector) {
  ovis::ParameterVector p;
  EXPECT_EQ(p.add_segment("a", 3), 0U);
  EXPECT_EQ(p.add_segment("b", 2), 3U);
  EXPECT_EQ(p.size(), 5U);
  EXPECT_EQ(p.segment("b").offset, 3U);
  p.segment_values("b")[1] = 4.0;
  EXPECT_EQ(p.values()[4], 4.0);
  EXPECT_THROW((void)p.segment("c"), ovis::Error);
}

TEST(Checkpoint, RoundTripsAndUsesTheDocumentedHeader) {
  auto model = ovis::gmm_make(4, 3);
  std::stringstream buffer;
  ovis::write_checkpoint(buffer, model.phi());
  const std::string bytes = buffer.str();
  ASSERT_GE(bytes.size(), 16U);
  EXPECT_EQ(bytes.substr(0, 8), "OVISPARM");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  EXPECT_EQ(version, 1U);
  std::uint32_t segments = 0;
  std::memcpy(&segments, bytes.data() + 12, 4);
  EXPECT_EQ(segments, 4U);
  // Trailing values are raw little-endian doubles.
  double last = 0.0;
  std::memcpy(&last, bytes.data() + bytes.size() - 8, 8);
  EXPECT_EQ(last, model.phi().values().back());

  std::stringstream in{bytes};
  const auto restored = ovis::read_checkpoint(in);
  EXPECT_TRUE(restored == model.phi());
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad{"NOTMAGIC........"};
  EXPECT_THROW((void)ovis::read_checkpoint(bad), ovis::Error);
  auto model = ovis::gmm_make(3);
  std::stringstream buffer;
  ovis::write_checkpoint(buffer, model.theta());
  std::stringstream truncated{buffer.str().substr(0, buffer.str().size() - 3)};
  EXPECT_THROW((void)ovis::read_checkpoint(truncated), ovis::Error);
}

TEST(GaussianModel, ZeroPerturbationIsExactlyOptimal) {
  const auto setup = ovis::gaussian_make(5, 64, 0.0, 9);
  const auto a = setup.model.matrix_a();
  const auto b = setup.model.offset_b();
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(a[i * 5 + j], i == j ? 0.5 : 0.0);
    }
    double mean = 0.0;
    for (const auto& x : setup.dataset) {
      mean += x[i];
    }
    mean /= 64.0;
    EXPECT_NEAR(setup.mu_hat[i], mean, 1e-12);
    EXPECT_EQ(b[i], 0.5 * setup.mu_hat[i]);
    EXPECT_EQ(setup.model.mu()[i], setup.mu_hat[i]);
  }
}

TEST(GaussianModel, SmallPerturbationStaysNearOptimum) {
  const auto setup = ovis::gaussian_make(20, 1024, 1e-3, 0);
  EXPECT_EQ(setup.dataset.size(), 1024U);
  const auto a = setup.model.matrix_a();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - setup.a_star[i]));
  }
  EXPECT_GT(worst, 0.0);
  EXPECT_LT(worst, 6e-3);
}

TEST(GaussianModel, RejectsBadShapes) {
  EXPECT_THROW((void)ovis::gaussian_make(0, 10, 0.0, 0), ovis::Error);
  EXPECT_THROW((void)ovis::gaussian_make(2, 0, 0.0, 0), ovis::Error);
  EXPECT_THROW((void)ovis::gaussian_make(2, 10, -1.0, 0), ovis::Error);
  GaussianToyModel model{3};
  EXPECT_THROW((void)model.score({1.0, 2.0}, {1.0, 2.0, 3.0}), ovis::Error);
  EXPECT_THROW((void)model.log_q({1.0, 2.0, 3.0}, {1.0}), ovis::Error);
}

TEST(GaussianModel, ScoreVanishesAtTheMean) {
  auto setup = ovis::gaussian_make(4, 16, 0.3, 1);
  const auto& x = setup.dataset[0];
  const auto mean = setup.model.q_mean(x);
  for (double g : setup.model.score(x, mean)) {
    EXPECT_EQ(g, 0.0);
  }
}

TEST(GaussianModel, ScoreHasZeroExpectation) {
  auto setup = ovis::gaussian_make(4, 16, 0.3, 2);
  const auto& x = setup.dataset[3];
  ovis::testing::Moments m;
  RandomStream rng{1, 0};
  for (int i = 0; i < 100000; ++i) {
    const auto z = setup.model.sample_q(x, rng);
    m.add(setup.model.score(x, z));
  }
  const std::vector<double> zero(setup.model.phi().size(), 0.0);
  EXPECT_LT(ovis::testing::worst_z(m, zero), 4.0);
}

TEST(GaussianModel, ReparameterizationPath) {
  auto setup = ovis::gaussian_make(3, 8, 0.2, 3);
  const auto& x = setup.dataset[0];
  const std::vector<double> zero(3, 0.0);
  EXPECT_EQ(setup.model.transform(x, zero), setup.model.q_mean(x));
  const std::vector<double> eps{0.3, -1.2, 2.0};
  const auto z = setup.model.transform(x, eps);
  const auto m = setup.model.q_mean(x);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(z[i], m[i] + std::sqrt(2.0 / 3.0) * eps[i], 1e-14);
  }
  // dz/db is the identity: the b block of J^T u is u itself.
  const std::vector<double> upstream{1.5, -2.0, 0.25};
  std::vector<double> out(setup.model.phi().size(), 0.0);
  setup.model.accumulate_path_gradient(x, eps, upstream, 1.0, out);
  const auto& b = setup.model.phi().segment("b");
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out[b.offset + i], upstream[i]);
  }
}

TEST(GaussianModel, MarginalMatchesMonteCarloIntegral) {
  auto setup = ovis::gaussian_make(2, 8, 0.0, 4);
  const auto& model = setup.model;
  const std::vector<double> x{0.7, -0.4};
  // p(x) = E_{z ~ N(mu, I)} N(x; z, I)
  RandomStream rng{2, 0};
  const int n = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  const auto mu = model.mu();
  for (int i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      const double z = mu[j] + rng.normal();
      sq += (x[j] - z) * (x[j] - z);
    }
    const double lik = std::exp(-0.5 * sq) / (2.0 * std::numbers::pi);
    sum += lik;
    sum_sq += lik * lik;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / (n - 1));
  EXPECT_NEAR(std::exp(model.log_marginal(x)), mean, 3.0 * se);
}

TEST(GaussianModel, ImportanceWeightedEstimateStaysBelowTheMarginal) {
  auto setup = ovis::gaussian_make(3, 32, 0.05, 5);
  const auto& model = setup.model;
  const auto& x = setup.dataset[1];
  const double exact = model.log_marginal(x);
  const int replicates = 10000;
  const int particles = 5000;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::vector<double> lw(particles);
  for (int r = 0; r < replicates; ++r) {
    RandomStream rng{3, static_cast<std::uint64_t>(r)};
    for (int k = 0; k < particles; ++k) {
      const auto z = model.sample_q(x, rng);
      lw[static_cast<std::size_t>(k)] = model.log_joint(x, z) - model.log_q(x, z);
    }
    const double estimate = ovis::log_sum_exp(lw) - std::log(static_cast<double>(particles));
    sum += estimate;
    sum_sq += estimate * estimate;
  }
  const double mean = sum / replicates;
  const double se = std::sqrt((sum_sq / replicates - mean * mean) / (replicates - 1));
  EXPECT_LE(mean, exact + 3.0 * se);
  EXPECT_NEAR(mean, exact, 0.05);
}

TEST(GaussianModel, NotEnumerable) {
  GaussianToyModel model{2};
  EXPECT_THROW((void)ovis::enumerate_latents(model, std::vector<double>{0.0, 0.0}), ovis::CapabilityError);
}

TEST(GmmModel, TruePriorIsProportionalToIndexPlusFive) {
  const auto model = ovis::gmm_make(20);
  const auto p = model.prior_probs();
  double total = 0.0;
  for (double v : p) {
    total += v;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(p[0], 5.0 / 290.0, 1e-14);
  EXPECT_NEAR(p[19], 24.0 / 290.0, 1e-14);
  EXPECT_NEAR(p[19] / p[0], 24.0 / 5.0, 1e-12);
}

TEST(GmmModel, RejectsBadInput) {
  EXPECT_THROW((void)ovis::gmm_make(1), ovis::Error);
  const auto model = ovis::gmm_make(3);
  EXPECT_THROW((void)model.score(1.0, 3), ovis::InvalidArgument);
  EXPECT_THROW((void)model.log_joint(1.0, -1), ovis::InvalidArgument);
}

TEST(GmmModel, ScoreHasZeroExpectationUnderEnumeration) {
  std::mt19937_64 gen{10};
  for (int t = 0; t < 20; ++t) {
    auto model = ovis::gmm_make(2 + t % 6, static_cast<std::uint64_t>(t));
    ovis::testing::fill_normal(model.phi().values(), gen, 1.0);
    const double x = 7.3 * t - 20.0;
    const auto q = model.q_probs(x);
    std::vector<double> total(model.phi().size(), 0.0);
    for (int z = 0; z < model.clusters(); ++z) {
      const auto s = model.score(x, z);
      for (std::size_t i = 0; i < s.size(); ++i) {
        total[i] += q[static_cast<std::size_t>(z)] * s[i];
      }
    }
    for (double v : total) {
      ASSERT_NEAR(v, 0.0, 1e-10);
    }
  }
}

TEST(GmmModel, TwoEqualLogitsGiveOppositeBiasScores) {
  auto model = ovis::gmm_make(2, 4);
  for (double& w : model.phi().segment_values("W2")) {
    w = 0.0;
  }
  model.phi().segment_values("b2")[0] = 0.4;
  model.phi().segment_values("b2")[1] = 0.4;
  const auto s0 = model.score(3.0, 0);
  const auto s1 = model.score(3.0, 1);
  const auto& b2 = model.phi().segment("b2");
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(s0[b2.offset + i], -s1[b2.offset + i], 1e-15);
  }
  EXPECT_NEAR(s0[b2.offset], 0.5, 1e-15);
}

TEST(GmmModel, EnumerationCoversEveryValueOnce) {
  auto model = ovis::gmm_make(20, 1);
  const double x = 42.0;
  const auto terms = ovis::enumerate_latents(model, x);
  ASSERT_EQ(terms.size(), 20U);
  double q_total = 0.0;
  std::vector<double> lj;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    EXPECT_EQ(terms[i].z, static_cast<int>(i));
    q_total += std::exp(terms[i].log_q);
    lj.push_back(terms[i].log_joint);
  }
  EXPECT_NEAR(q_total, 1.0, 1e-12);
  EXPECT_NEAR(ovis::log_sum_exp(lj), model.log_marginal(x), 1e-12);
}

TEST(GmmModel, MarginalMatchesMixtureFormula) {
  std::mt19937_64 gen{11};
  for (int t = 0; t < 50; ++t) {
    auto model = ovis::gmm_make(2 + t % 19);
    ovis::testing::fill_normal(model.theta().values(), gen, 1.0);
    const double x = -10.0 + 4.1 * t;
    const auto th = model.theta().values();
    double norm = 0.0;
    for (double v : th) {
      norm += std::exp(v);
    }
    long double p = 0.0L;
    for (int z = 0; z < model.clusters(); ++z) {
      const double r = (x - 10.0 * z) / 5.0;
      p += std::exp(th[static_cast<std::size_t>(z)]) / norm * std::exp(-0.5 * r * r) /
           (5.0 * std::sqrt(2.0 * std::numbers::pi));
    }
    ASSERT_NEAR(model.log_marginal(x), static_cast<double>(std::log(p)), 1e-10);
  }
}

TEST(GmmModel, BatchSamplerMatchesSequentialDraws) {
  auto model = ovis::gmm_make(6, 2);
  RandomStream a{4, 1};
  RandomStream b{4, 1};
  const auto [zs, lq] = model.sample_q_many(11.0, 50, a);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const int z = model.sample_q(11.0, b);
    ASSERT_EQ(zs[i], z);
    ASSERT_NEAR(lq[i], model.log_q(11.0, z), 1e-14);
  }
}

TEST(GmmModel, InitializationIsSeededAndBounded) {
  const auto a = ovis::gmm_make(5, 7);
  const auto b = ovis::gmm_make(5, 7);
  const auto c = ovis::gmm_make(5, 8);
  EXPECT_TRUE(a.phi() == b.phi());
  EXPECT_FALSE(a.phi() == c.phi());
  for (double w : a.phi().segment_values("W2")) {
    EXPECT_LE(std::abs(w), 0.25);
  }
  for (double w : a.phi().segment_values("W1")) {
    EXPECT_LE(std::abs(w), 1.0);
  }
}

TEST(FiniteDifferences, EveryAnalyticDerivative) {
  for (const auto& r : ovis::testing::finite_difference_suite(100, 2026)) {
    EXPECT_TRUE(r.pass()) << r.name << ": worst relative error " << r.worst;
    EXPECT_EQ(r.cases, 100) << r.name;
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0};
  ovis::AdamState s{2, 1e-3};
  ovis::adam_step(p, std::vector<double>{0.0, 0.0}, s);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByTheLearningRateUphill) {
  std::vector<double> p{0.0, 0.0};
  ovis::AdamState s{2, 1e-3};
  ovis::adam_step(p, std::vector<double>{0.37, -5.0}, s);
  EXPECT_NEAR(p[0], 1e-3, 1e-10);
  EXPECT_NEAR(p[1], -1e-3, 1e-10);
}

TEST(Adam, IdenticalStreamsGiveIdenticalTrajectories) {
  std::vector<double> a{0.5, 0.1, -0.3};
  std::vector<double> b = a;
  ovis::AdamState sa{3, 1e-2};
  ovis::AdamState sb{3, 1e-2};
  std::mt19937_64 gen{12};
  for (int i = 0; i < 100; ++i) {
    const auto g = ovis::testing::normal_vector(3, gen);
    ovis::adam_step(a, g, sa);
    ovis::adam_step(b, g, sb);
  }
  EXPECT_EQ(a, b);
}

TEST(Adam, RejectsBadGradients) {
  std::vector<double> p{0.0, 0.0};
  ovis::AdamState s{2, 1e-3};
  EXPECT_THROW(ovis::adam_step(p, std::vector<double>{0.0}, s), ovis::Error);
  EXPECT_THROW(ovis::adam_step(p, std::vector<double>{0.0, std::nan("")}, s), ovis::NonFiniteError);
}

}  // namespace
