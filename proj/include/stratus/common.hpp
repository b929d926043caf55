// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stratus {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: configuration files, command-line values,
/// mismatched boundary tags, malformed meshes.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Expression-text parse failure. Carries the byte offset of the
/// offending token in the input string.
class SyntaxError : public Error {
public:
  SyntaxError(const std::string& msg, std::size_t offset)
      : Error(msg + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/// Numerical failure at runtime: non-finite values, divergence,
/// loss of hyperbolicity, exceeded iteration budgets.
class NumericsError : public Error {
public:
  using Error::Error;
};

/// Operation not available for the given object (e.g. a model
/// without a lifting map).
class UnsupportedError : public Error {
public:
  using Error::Error;
};

/// Shortest round-trippable decimal representation used by all
/// text writers ("%.17g").
std::string format_g17(double v);

/// Integer power by exponentiation-by-squaring. Every evaluation backend
/// (tree walker, scalar tape, SIMD tape) runs this exact operation
/// sequence so that results agree bitwise.
double ipow(double base, int exponent);

} // namespace stratus
