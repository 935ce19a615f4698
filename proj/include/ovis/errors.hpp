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

#ifndef OVIS_ERRORS_HPP
#define OVIS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ovis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An estimator asked a model for something it cannot provide.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// The requested configuration has no implementation (e.g. an alpha limit).
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared where a finite value is required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// A configuration file is missing or malformed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InvalidArgument(message);
  }
}

}  // namespace detail

}  // namespace ovis

#endif  // OVIS_ERRORS_HPP
