// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace stratus {

/// Arbitrary-precision integer / rational used by the exact polynomial
/// algebra. Depth-basis moment integrals overflow 64-bit intermediates
/// well below the supported expansion order, so these are not optional.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

} // namespace stratus
