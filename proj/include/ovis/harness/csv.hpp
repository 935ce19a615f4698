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

#ifndef OVIS_HARNESS_CSV_HPP
#define OVIS_HARNESS_CSV_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <ovis/errors.hpp>

namespace ovis {

/// Shortest round-trip decimal; infinities as "inf"/"-inf", NaN as "nan".
inline std::string format_number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) {
    throw Error("format_number: conversion failed");
  }
  return {buf, res.ptr};
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }
inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

/// RFC 4180 field quoting.
inline std::string csv_escape(std::string_view field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!quote) {
    return std::string{field};
  }
  std::string out{"\""};
  for (char c : field) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

/// Writes a header row up front and checks every row against it. Lines end in CRLF.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header) : out_{out}, width_{header.size()} {
    detail::require(!header.empty(), "CsvWriter: header must not be empty");
    write(header);
  }

  void row(const std::vector<std::string>& fields) {
    detail::require(fields.size() == width_, "CsvWriter: row has " + std::to_string(fields.size()) +
                                                 " fields, header has " + std::to_string(width_));
    write(fields);
  }

 private:
  void write(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) {
        out_ << ',';
      }
      out_ << csv_escape(fields[i]);
    }
    out_ << "\r\n";
  }

  std::ostream& out_;
  std::size_t width_;
};

}  // namespace ovis

#endif  // OVIS_HARNESS_CSV_HPP
