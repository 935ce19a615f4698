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

#ifndef OVIS_RNG_HPP
#define OVIS_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

/**
 * \file
 * \brief Counter-based random streams.
 *
 * Every draw is a pure function of (seed, stream id, counter), computed with the
 * Philox4x32-10 bijection. Monte Carlo replicates get disjoint stream ids, so any
 * replicate can be recomputed in isolation and the order of evaluation across
 * threads never changes a result.
 */

namespace ovis {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31U);
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53U;
  constexpr std::uint32_t kM1 = 0xCD9E8D57U;
  constexpr std::uint32_t kW0 = 0x9E3779B9U;
  constexpr std::uint32_t kW1 = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32U);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32U);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

}  // namespace detail

/// A reproducible random stream; satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_{seed}, stream_{stream} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  /// Child stream whose id is a hash of this stream's id and `child`.
  [[nodiscard]] RandomStream split(std::uint64_t child) const {
    return RandomStream{seed_, detail::splitmix64(stream_ ^ detail::splitmix64(child + 0x632BE59BD9B4E019ULL))};
  }

  result_type operator()() {
    if (cursor_ >= 2) {
      refill();
    }
    return block_[cursor_++];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>((*this)() >> 11U) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal deviate (Box-Muller, pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Index drawn from unnormalized non-negative probabilities.
  int categorical(std::span<const double> probabilities) {
    double total = 0.0;
    for (double p : probabilities) {
      total += p;
    }
    const double target = uniform() * total;
    double running = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      running += probabilities[i];
      if (target < running) {
        return static_cast<int>(i);
      }
    }
    // Rounding can leave target == total; fall back to the last non-zero entry.
    for (std::size_t i = probabilities.size(); i-- > 0;) {
      if (probabilities[i] > 0.0) {
        return static_cast<int>(i);
      }
    }
    return static_cast<int>(probabilities.size()) - 1;
  }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32U),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32U)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32U)};
    const auto out = detail::philox4x32_10(ctr, key);
    block_[0] = (static_cast<std::uint64_t>(out[1]) << 32U) | out[0];
    block_[1] = (static_cast<std::uint64_t>(out[3]) << 32U) | out[2];
    ++counter_;
    cursor_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_{0};
  std::array<std::uint64_t, 2> block_{};
  int cursor_{2};
  double spare_{0.0};
  bool has_spare_{false};
};

}  // namespace ovis

#endif  // OVIS_RNG_HPP
