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

#ifndef OVIS_DIAGNOSTICS_STATS_HPP
#define OVIS_DIAGNOSTICS_STATS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <ovis/errors.hpp>
#include <ovis/estimators/dispatch.hpp>
#include <ovis/parameters.hpp>
#include <ovis/rng.hpp>

namespace ovis {

/// Single-pass mean and variance (Welford), mergeable across chunks (Chan et al.).
class RunningMoments {
 public:
  RunningMoments() = default;
  explicit RunningMoments(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void add(std::span<const double> x) {
    if (mean_.empty() && count_ == 0) {
      mean_.assign(x.size(), 0.0);
      m2_.assign(x.size(), 0.0);
    }
    detail::require(x.size() == mean_.size(), "RunningMoments: dimension mismatch");
    ++count_;
    const double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double delta = x[i] - mean_[i];
      mean_[i] += delta / n;
      m2_[i] += delta * (x[i] - mean_[i]);
    }
  }

  void merge(const RunningMoments& other) {
    if (other.count_ == 0) {
      return;
    }
    if (count_ == 0) {
      *this = other;
      return;
    }
    detail::require(other.mean_.size() == mean_.size(), "RunningMoments: dimension mismatch");
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double delta = other.mean_[i] - mean_[i];
      mean_[i] += delta * nb / n;
      m2_[i] += other.m2_[i] + delta * delta * na * nb / n;
    }
    count_ += other.count_;
  }

  [[nodiscard]] std::int64_t count() const { return count_; }
  [[nodiscard]] std::size_t dim() const { return mean_.size(); }
  [[nodiscard]] const std::vector<double>& mean() const { return mean_; }

  /// Unbiased (n - 1) variance; zero with fewer than two samples.
  [[nodiscard]] std::vector<double> variance() const {
    std::vector<double> v(mean_.size(), 0.0);
    if (count_ < 2) {
      return v;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = std::max(0.0, m2_[i] / static_cast<double>(count_ - 1));
    }
    return v;
  }

 private:
  std::int64_t count_{0};
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// |mean| / sd, with 0/0 = 0 and nonzero/0 = +inf.
inline double signal_to_noise(double mean, double variance) {
  if (variance <= 0.0) {
    return mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::abs(mean) / std::sqrt(variance);
}

/// Averages over one parameter segment.
struct SegmentSummary {
  std::string name;
  double avg_snr{0.0};
  double avg_variance{0.0};
  double avg_abs_mean{0.0};
  /// SNR of g projected on the mean direction of this segment.
  double dsnr{0.0};
};

struct GradientStats {
  int n_replicates{0};
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> snr;
  double dsnr{0.0};
  double avg_snr{0.0};
  double avg_variance{0.0};
  double avg_abs_mean{0.0};
  std::vector<SegmentSummary> segments;

  [[nodiscard]] const SegmentSummary& segment(std::string_view name) const {
    for (const auto& s : segments) {
      if (s.name == name) {
        return s;
      }
    }
    throw InvalidArgument("GradientStats: no segment named " + std::string{name});
  }
};

/// Statistics of phi and (when produced) theta gradients.
struct EstimatorStats {
  GradientStats phi;
  std::optional<GradientStats> theta;
};

namespace detail {

// Moments of one gradient block plus scalar projections for DSNR.
struct BlockAccumulator {
  RunningMoments moments;
  // Entry 0 is the whole block, then one per segment.
  std::vector<RunningMoments> projections;
};

struct ChunkResult {
  BlockAccumulator phi;
  BlockAccumulator theta;
  bool has_theta{false};
};

inline std::vector<Segment> whole_and_segments(std::size_t dim, const std::vector<Segment>& segments) {
  std::vector<Segment> out{Segment{"all", 0, dim}};
  out.insert(out.end(), segments.begin(), segments.end());
  return out;
}

// Unit directions per segment from a mean vector; zero direction when the mean is zero.
inline std::vector<std::vector<double>> directions(const std::vector<double>& mean, const std::vector<Segment>& parts) {
  std::vector<std::vector<double>> dirs;
  for (const auto& s : parts) {
    std::vector<double> u(mean.begin() + static_cast<std::ptrdiff_t>(s.offset),
                          mean.begin() + static_cast<std::ptrdiff_t>(s.offset + s.length));
    double norm = 0.0;
    for (double v : u) {
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : u) {
      v = norm > 0.0 ? v / norm : 0.0;
    }
    dirs.push_back(std::move(u));
  }
  return dirs;
}

inline void add_to_block(BlockAccumulator& acc, std::span<const double> g, const std::vector<Segment>& parts,
                         const std::vector<std::vector<double>>* dirs) {
  acc.moments.add(g);
  if (dirs == nullptr) {
    return;
  }
  if (acc.projections.empty()) {
    acc.projections.resize(parts.size());
  }
  for (std::size_t p = 0; p < parts.size(); ++p) {
    double dot = 0.0;
    for (std::size_t i = 0; i < parts[p].length; ++i) {
      dot += g[parts[p].offset + i] * (*dirs)[p][i];
    }
    acc.projections[p].add(std::span<const double>{&dot, 1});
  }
}

inline void merge_block(BlockAccumulator& into, const BlockAccumulator& from) {
  into.moments.merge(from.moments);
  if (into.projections.empty()) {
    into.projections = from.projections;
    return;
  }
  for (std::size_t p = 0; p < from.projections.size(); ++p) {
    into.projections[p].merge(from.projections[p]);
  }
}

// Pairwise tree reduction in chunk order, so the result does not depend on threading.
inline ChunkResult tree_reduce(std::vector<ChunkResult> chunks) {
  if (chunks.empty()) {
    return {};
  }
  while (chunks.size() > 1) {
    std::vector<ChunkResult> next;
    next.reserve((chunks.size() + 1) / 2);
    for (std::size_t i = 0; i < chunks.size(); i += 2) {
      ChunkResult merged = std::move(chunks[i]);
      if (i + 1 < chunks.size()) {
        merge_block(merged.phi, chunks[i + 1].phi);
        merge_block(merged.theta, chunks[i + 1].theta);
        merged.has_theta = merged.has_theta || chunks[i + 1].has_theta;
      }
      next.push_back(std::move(merged));
    }
    chunks = std::move(next);
  }
  return std::move(chunks.front());
}

inline constexpr int kChunkSize = 64;

using ReplicateFn = std::function<GradientEstimate(RandomStream&)>;

struct PhaseSetup {
  int begin;
  int end;
  std::uint64_t seed;
  const std::vector<Segment>* phi_parts;
  const std::vector<Segment>* theta_parts;
  const std::vector<std::vector<double>>* phi_dirs;
  const std::vector<std::vector<double>>* theta_dirs;
};

inline void check_finite(const std::vector<double>& g, int replicate, std::uint64_t seed) {
  for (double v : g) {
    if (!std::isfinite(v)) {
      throw NonFiniteError("non-finite gradient in replicate " + std::to_string(replicate) + " (seed " +
                           std::to_string(seed) + ", stream " + std::to_string(replicate) + ")");
    }
  }
}

inline ChunkResult run_chunk(const ReplicateFn& fn, const PhaseSetup& setup, int chunk_begin, int chunk_end) {
  ChunkResult out;
  for (int r = chunk_begin; r < chunk_end; ++r) {
    RandomStream rng{setup.seed, static_cast<std::uint64_t>(r)};
    GradientEstimate est;
    try {
      est = fn(rng);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError(std::string{e.what()} + " in replicate " + std::to_string(r) + " (seed " +
                           std::to_string(setup.seed) + ", stream " + std::to_string(r) + ")");
    }
    check_finite(est.phi_grad, r, setup.seed);
    add_to_block(out.phi, est.phi_grad, *setup.phi_parts, setup.phi_dirs);
    if (est.theta_grad) {
      check_finite(*est.theta_grad, r, setup.seed);
      add_to_block(out.theta, *est.theta_grad, *setup.theta_parts, setup.theta_dirs);
      out.has_theta = true;
    }
  }
  return out;
}

inline ChunkResult run_phase(const ReplicateFn& fn, const PhaseSetup& setup, int threads) {
  const int n = setup.end - setup.begin;
  const int n_chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkResult> chunks(static_cast<std::size_t>(std::max(n_chunks, 0)));
  auto work = [&](int c) {
    const int b = setup.begin + c * kChunkSize;
    chunks[static_cast<std::size_t>(c)] = run_chunk(fn, setup, b, std::min(setup.end, b + kChunkSize));
  };
  const int workers = std::clamp(threads, 1, std::max(n_chunks, 1));
  if (workers == 1) {
    for (int c = 0; c < n_chunks; ++c) {
      work(c);
    }
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (int c = next++; c < n_chunks; c = next++) {
          try {
            work(c);
          } catch (...) {
            const std::lock_guard lock{failure_mutex};
            if (!failure) {
              failure = std::current_exception();
            }
          }
        }
      });
    }
    for (auto& th : pool) {
      th.join();
    }
    if (failure) {
      std::rethrow_exception(failure);
    }
  }
  return tree_reduce(std::move(chunks));
}

inline GradientStats finish_block(const BlockAccumulator& first, const BlockAccumulator& second,
                                  const std::vector<Segment>& parts) {
  RunningMoments all = first.moments;
  all.merge(second.moments);
  GradientStats s;
  s.n_replicates = static_cast<int>(all.count());
  s.mean = all.mean();
  s.variance = all.variance();
  s.snr.resize(s.mean.size());
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    s.snr[i] = signal_to_noise(s.mean[i], s.variance[i]);
  }
  for (std::size_t p = 0; p < parts.size(); ++p) {
    SegmentSummary seg;
    seg.name = parts[p].name;
    const double len = static_cast<double>(std::max<std::size_t>(parts[p].length, 1));
    for (std::size_t i = parts[p].offset; i < parts[p].offset + parts[p].length; ++i) {
      seg.avg_snr += s.snr[i] / len;
      seg.avg_variance += s.variance[i] / len;
      seg.avg_abs_mean += std::abs(s.mean[i]) / len;
    }
    if (p < second.projections.size()) {
      seg.dsnr = signal_to_noise(second.projections[p].mean()[0], second.projections[p].variance()[0]);
    }
    if (p == 0) {
      s.avg_snr = seg.avg_snr;
      s.avg_variance = seg.avg_variance;
      s.avg_abs_mean = seg.avg_abs_mean;
      s.dsnr = seg.dsnr;
    } else {
      s.segments.push_back(std::move(seg));
    }
  }
  return s;
}

}  // namespace detail

/// Runs n_mc replicates of `fn`; replicate r draws from RandomStream(seed, r).
/// The first half of the replicates fixes the mean direction used for DSNR on the
/// second half. Results are identical for any thread count.
inline EstimatorStats replicate_stats(const detail::ReplicateFn& fn, int n_mc, std::uint64_t seed,
                                      const std::vector<Segment>& phi_segments,
                                      const std::vector<Segment>& theta_segments, int threads = 1) {
  detail::require(n_mc >= 2, "gradient_stats: n_mc must be at least 2");
  // Dimensions are only known after the first replicate.
  RandomStream probe_rng{seed, 0};
  const auto probe = fn(probe_rng);
  const auto phi_parts = detail::whole_and_segments(probe.phi_grad.size(), phi_segments);
  const auto theta_parts =
      detail::whole_and_segments(probe.theta_grad ? probe.theta_grad->size() : 0, theta_segments);

  const int half = n_mc / 2;
  detail::PhaseSetup first{0, half, seed, &phi_parts, &theta_parts, nullptr, nullptr};
  const auto a = detail::run_phase(fn, first, threads);
  const auto phi_dirs = detail::directions(a.phi.moments.mean(), phi_parts);
  const auto theta_dirs =
      a.has_theta ? detail::directions(a.theta.moments.mean(), theta_parts) : std::vector<std::vector<double>>{};
  detail::PhaseSetup second{half, n_mc, seed, &phi_parts, &theta_parts, &phi_dirs,
                            a.has_theta ? &theta_dirs : nullptr};
  const auto b = detail::run_phase(fn, second, threads);

  EstimatorStats out;
  out.phi = detail::finish_block(a.phi, b.phi, phi_parts);
  if (a.has_theta && b.has_theta) {
    out.theta = detail::finish_block(a.theta, b.theta, theta_parts);
  }
  return out;
}

/// Monte Carlo characterization of an estimator at one datapoint.
template <ScoreModel M>
EstimatorStats gradient_stats(const M& model, const typename M::observation_type& x, const EstimatorSpec& spec,
                              int n_mc, std::uint64_t seed, int threads = 1) {
  spec.validate();
  auto fn = [&](RandomStream& rng) { return estimate(model, x, spec, rng); };
  return replicate_stats(fn, n_mc, seed, model.phi().segments(), model.theta().segments(), threads);
}

/// Same, with each replicate averaging over the whole dataset (datapoint i uses rng.split(i)).
template <ScoreModel M>
EstimatorStats gradient_stats_batch(const M& model, std::span<const typename M::observation_type> xs,
                                    const EstimatorSpec& spec, int n_mc, std::uint64_t seed, int threads = 1) {
  spec.validate();
  auto fn = [&](RandomStream& rng) { return estimate_batch(model, xs, spec, rng); };
  return replicate_stats(fn, n_mc, seed, model.phi().segments(), model.theta().segments(), threads);
}

}  // namespace ovis

#endif  // OVIS_DIAGNOSTICS_STATS_HPP
