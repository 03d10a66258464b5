// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#pragma once

#include <stdexcept>
#include <string>

namespace sfp {

/// Base class of every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data (non-finite pixels, bad files,
/// mismatched shapes).
class InputError : public Error {
  public:
    using Error::Error;
};

/// Invalid configuration: bad angle sets, brackets, preset parameters.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Scalar argument outside the domain of a physical model.
class DomainError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

/// Numerical failure: divergence, empty estimation sets.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Metric evaluation failure (e.g. empty mask).
class EvalError : public InputError {
  public:
    using InputError::InputError;
};

}  // namespace sfp
