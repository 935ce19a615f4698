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

#ifndef OVIS_PARAMETERS_HPP
#define OVIS_PARAMETERS_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <ovis/errors.hpp>

namespace ovis {

/// A named contiguous slice of a flat parameter vector.
struct Segment {
  std::string name;
  std::size_t offset{0};
  std::size_t length{0};

  bool operator==(const Segment&) const = default;
};

/// Flat real parameters partitioned into named segments.
class ParameterVector {
 public:
  ParameterVector() = default;

  /// Appends a zero-initialized segment and returns its offset.
  std::size_t add_segment(std::string name, std::size_t length) {
    for (const auto& s : segments_) {
      detail::require(s.name != name, "duplicate segment name: " + name);
    }
    const std::size_t offset = values_.size();
    segments_.push_back(Segment{std::move(name), offset, length});
    values_.resize(offset + length, 0.0);
    return offset;
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }

  [[nodiscard]] const Segment& segment(const std::string& name) const {
    for (const auto& s : segments_) {
      if (s.name == name) {
        return s;
      }
    }
    throw InvalidArgument("unknown parameter segment: " + name);
  }

  [[nodiscard]] std::span<double> segment_values(const std::string& name) {
    const auto& s = segment(name);
    return std::span<double>{values_}.subspan(s.offset, s.length);
  }
  [[nodiscard]] std::span<const double> segment_values(const std::string& name) const {
    const auto& s = segment(name);
    return std::span<const double>{values_}.subspan(s.offset, s.length);
  }

  /// A zero vector with the same layout.
  [[nodiscard]] ParameterVector zeros_like() const {
    ParameterVector out = *this;
    std::fill(out.values_.begin(), out.values_.end(), 0.0);
    return out;
  }

  bool operator==(const ParameterVector&) const = default;

 private:
  std::vector<Segment> segments_;
  std::vector<double> values_;
};

// Checkpoint format, all integers and floats little-endian:
//   "OVISPARM" | version u32 | segment count u32
//   per segment: name length u32 | name bytes | offset u64 | length u64
//   value count u64 | values f64[count]
inline constexpr char kCheckpointMagic[8] = {'O', 'V', 'I', 'S', 'P', 'A', 'R', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) {
    throw InvalidArgument("checkpoint: truncated input");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const ParameterVector& params) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.segments().size()));
  for (const auto& s : params.segments()) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    detail::write_le<std::uint64_t>(out, s.offset);
    detail::write_le<std::uint64_t>(out, s.length);
  }
  detail::write_le<std::uint64_t>(out, params.size());
  for (double v : params.values()) {
    detail::write_le<double>(out, v);
  }
}

inline ParameterVector read_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw InvalidArgument("checkpoint: bad magic");
  }
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw InvalidArgument("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = detail::read_le<std::uint32_t>(in);
  ParameterVector params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_length = detail::read_le<std::uint32_t>(in);
    std::string name(name_length, '\0');
    in.read(name.data(), name_length);
    const auto offset = detail::read_le<std::uint64_t>(in);
    const auto length = detail::read_le<std::uint64_t>(in);
    if (params.add_segment(std::move(name), length) != offset) {
      throw InvalidArgument("checkpoint: segment table does not partition the vector");
    }
  }
  const auto n = detail::read_le<std::uint64_t>(in);
  if (n != params.size()) {
    throw InvalidArgument("checkpoint: value count disagrees with segment table");
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    params[i] = detail::read_le<double>(in);
  }
  return params;
}

}  // namespace ovis

#endif  // OVIS_PARAMETERS_HPP
