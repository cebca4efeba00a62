// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#pragma once

#include <stdexcept>
#include <string>

namespace vtd {

/// Base class of every error raised by the library. The CLI maps each
/// subclass to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument (bad sample rate, empty pool, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input too short or empty to produce any output.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Matrix or tensor dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operation called in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or malformed file / manifest.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN loss, infeasible target where a gradient was required, ...
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace vtd
