// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vdb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent tensor shapes or geometry (indivisible windows, mismatched
/// frames, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad user input: configuration, paths, argument ranges.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf appeared, or a numerical routine could not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised by grad() when a requested parameter does not feed the loss.
class UnreachableParameter : public Error {
 public:
  using Error::Error;
};

}  // namespace vdb
