// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace geneval {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems caused by the caller's data, files or flags. The CLI maps these
/// to exit code 2; anything else deriving from Error maps to 1.
class InputError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

/// Malformed or corrupted serialized data.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure that is not attributable to the input (e.g. an
/// eigensolver that did not converge).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace geneval
