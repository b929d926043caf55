// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#pragma once

#include <vector>

#include "stratus/common.hpp"
#include "stratus/rational.hpp"

namespace stratus {

/// Dense univariate polynomial in the vertical coordinate ζ ∈ [0, 1]
/// with exact rational coefficients. coeff[i] multiplies ζ^i. The zero
/// polynomial is represented by an empty coefficient vector; all
/// operations strip trailing zero coefficients.
struct RationalPoly {
  std::vector<Rational> coeff;

  RationalPoly() = default;
  explicit RationalPoly(std::vector<Rational> c);

  /// Degree of the polynomial; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeff.size()) - 1; }
  bool is_zero() const { return coeff.empty(); }

  Rational eval(const Rational& x) const;
  double eval(double x) const;
};

bool operator==(const RationalPoly& a, const RationalPoly& b);

RationalPoly poly_add(const RationalPoly& a, const RationalPoly& b);
RationalPoly poly_sub(const RationalPoly& a, const RationalPoly& b);
RationalPoly poly_mul(const RationalPoly& a, const RationalPoly& b);
RationalPoly poly_scale(const Rational& s, const RationalPoly& p);

/// d/dζ.
RationalPoly poly_diff(const RationalPoly& p);

/// Antiderivative with integration constant zero (vanishes at ζ = 0).
RationalPoly poly_antiderivative(const RationalPoly& p);

/// Definite integral over ζ ∈ [0, 1].
Rational poly_integrate_definite(const RationalPoly& p);

/// Maximum supported vertical expansion order.
inline constexpr int kMaxBasisOrder = 8;

/// k-th shifted Legendre polynomial on [0, 1], normalized so that
/// φ_k(1) = 1 (φ_0 = 1, φ_1 = 2ζ − 1, ...). Throws ConfigError for
/// k < 0 or k > kMaxBasisOrder.
const RationalPoly& legendre_shifted(int k);

/// Exact integrals of basis-function products used by the depth-averaged
/// moment systems, for expansion order N:
///   M[k]     = ∫ φ_k φ_k           (diagonal mass entries)
///   A[i,j,k] = ∫ φ_i φ_j φ_k       (advective coupling, symmetric in i,j)
///   B[k,i,j] = ∫ φ_k' Φ_j φ_i      (vertical coupling; Φ_j antiderivative
///                                    of φ_j with Φ_j(0) = 0)
///   D[i,k]   = ∫ φ_i' φ_k'         (dissipative coupling, symmetric)
/// All indices run over 0..N.
struct MomentTensors {
  int N = 0;
  std::vector<Rational> M;
  std::vector<Rational> A;
  std::vector<Rational> B;
  std::vector<Rational> D;

  const Rational& m(int k) const { return M[static_cast<std::size_t>(k)]; }
  const Rational& a(int i, int j, int k) const { return A[idx3(i, j, k)]; }
  const Rational& b(int k, int i, int j) const { return B[idx3(k, i, j)]; }
  const Rational& d(int i, int k) const { return D[idx2(i, k)]; }

  std::size_t idx2(int i, int k) const {
    const std::size_t n = static_cast<std::size_t>(N) + 1;
    return static_cast<std::size_t>(i) * n + static_cast<std::size_t>(k);
  }
  std::size_t idx3(int i, int j, int k) const {
    const std::size_t n = static_cast<std::size_t>(N) + 1;
    return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * n +
           static_cast<std::size_t>(k);
  }
};

/// Cached exact moment tensors for order N ∈ [0, kMaxBasisOrder].
const MomentTensors& moment_tensors(int N);

/// φ_k(ζ) evaluated in double precision (Horner form).
double eval_basis(int k, double zeta);

/// φ_0(ζ) .. φ_N(ζ).
std::vector<double> eval_basis_all(int N, double zeta);

} // namespace stratus
