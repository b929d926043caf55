// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#include "stratus/basis.hpp"

#include <array>
#include <cstdio>

namespace stratus {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void strip_trailing_zeros(std::vector<Rational>& c) {
  while (!c.empty() && c.back() == 0) c.pop_back();
}

} // namespace

RationalPoly::RationalPoly(std::vector<Rational> c) : coeff(std::move(c)) {
  strip_trailing_zeros(coeff);
}

Rational RationalPoly::eval(const Rational& x) const {
  Rational r = 0;
  for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) r = r * x + *it;
  return r;
}

double RationalPoly::eval(double x) const {
  double r = 0.0;
  for (auto it = coeff.rbegin(); it != coeff.rend(); ++it)
    r = r * x + to_double(*it);
  return r;
}

bool operator==(const RationalPoly& a, const RationalPoly& b) {
  return a.coeff == b.coeff;
}

RationalPoly poly_add(const RationalPoly& a, const RationalPoly& b) {
  std::vector<Rational> c(std::max(a.coeff.size(), b.coeff.size()), Rational(0));
  for (std::size_t i = 0; i < a.coeff.size(); ++i) c[i] += a.coeff[i];
  for (std::size_t i = 0; i < b.coeff.size(); ++i) c[i] += b.coeff[i];
  return RationalPoly(std::move(c));
}

RationalPoly poly_sub(const RationalPoly& a, const RationalPoly& b) {
  return poly_add(a, poly_scale(Rational(-1), b));
}

RationalPoly poly_mul(const RationalPoly& a, const RationalPoly& b) {
  if (a.is_zero() || b.is_zero()) return RationalPoly();
  std::vector<Rational> c(a.coeff.size() + b.coeff.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.coeff.size(); ++i)
    for (std::size_t j = 0; j < b.coeff.size(); ++j)
      c[i + j] += a.coeff[i] * b.coeff[j];
  return RationalPoly(std::move(c));
}

RationalPoly poly_scale(const Rational& s, const RationalPoly& p) {
  std::vector<Rational> c = p.coeff;
  for (auto& ci : c) ci *= s;
  return RationalPoly(std::move(c));
}

RationalPoly poly_diff(const RationalPoly& p) {
  if (p.coeff.size() <= 1) return RationalPoly();
  std::vector<Rational> c(p.coeff.size() - 1);
  for (std::size_t i = 1; i < p.coeff.size(); ++i)
    c[i - 1] = Rational(static_cast<long>(i)) * p.coeff[i];
  return RationalPoly(std::move(c));
}

RationalPoly poly_antiderivative(const RationalPoly& p) {
  if (p.is_zero()) return RationalPoly();
  std::vector<Rational> c(p.coeff.size() + 1, Rational(0));
  for (std::size_t i = 0; i < p.coeff.size(); ++i)
    c[i + 1] = p.coeff[i] / Rational(static_cast<long>(i + 1));
  return RationalPoly(std::move(c));
}

Rational poly_integrate_definite(const RationalPoly& p) {
  // ∫₀¹ p = Σ c_i / (i + 1).
  Rational r = 0;
  for (std::size_t i = 0; i < p.coeff.size(); ++i)
    r += p.coeff[i] / Rational(static_cast<long>(i + 1));
  return r;
}

const RationalPoly& legendre_shifted(int k) {
  if (k < 0 || k > kMaxBasisOrder)
    throw ConfigError("basis order out of range [0, " +
                      std::to_string(kMaxBasisOrder) +
                      "]: " + std::to_string(k));
  static const std::vector<RationalPoly> table = [] {
    std::vector<RationalPoly> t;
    t.reserve(kMaxBasisOrder + 1);
    t.push_back(RationalPoly({Rational(1)}));                 // φ_0 = 1
    t.push_back(RationalPoly({Rational(-1), Rational(2)}));   // φ_1 = 2ζ − 1
    const RationalPoly x = t[1]; // recurrence variable 2ζ − 1
    for (int n = 1; n < kMaxBasisOrder; ++n) {
      // (n+1) φ_{n+1} = (2n+1) (2ζ−1) φ_n − n φ_{n−1}
      RationalPoly next = poly_sub(
          poly_scale(Rational(2 * n + 1), poly_mul(x, t[static_cast<std::size_t>(n)])),
          poly_scale(Rational(n), t[static_cast<std::size_t>(n - 1)]));
      t.push_back(poly_scale(Rational(1, n + 1), next));
    }
    return t;
  }();
  return table[static_cast<std::size_t>(k)];
}

namespace {

MomentTensors build_tensors(int N) {
  MomentTensors t;
  t.N = N;
  const std::size_t n = static_cast<std::size_t>(N) + 1;
  t.M.resize(n);
  t.A.assign(n * n * n, Rational(0));
  t.B.assign(n * n * n, Rational(0));
  t.D.assign(n * n, Rational(0));

  std::vector<RationalPoly> phi(n), dphi(n), Phi(n);
  for (int k = 0; k <= N; ++k) {
    phi[static_cast<std::size_t>(k)] = legendre_shifted(k);
    dphi[static_cast<std::size_t>(k)] = poly_diff(phi[static_cast<std::size_t>(k)]);
    Phi[static_cast<std::size_t>(k)] = poly_antiderivative(phi[static_cast<std::size_t>(k)]);
  }

  for (int k = 0; k <= N; ++k)
    t.M[static_cast<std::size_t>(k)] = poly_integrate_definite(
        poly_mul(phi[static_cast<std::size_t>(k)], phi[static_cast<std::size_t>(k)]));

  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) {
      const RationalPoly pij =
          poly_mul(phi[static_cast<std::size_t>(i)], phi[static_cast<std::size_t>(j)]);
      for (int k = 0; k <= N; ++k)
        t.A[t.idx3(i, j, k)] =
            poly_integrate_definite(poly_mul(pij, phi[static_cast<std::size_t>(k)]));
    }

  for (int k = 0; k <= N; ++k)
    for (int j = 0; j <= N; ++j) {
      const RationalPoly pkj =
          poly_mul(dphi[static_cast<std::size_t>(k)], Phi[static_cast<std::size_t>(j)]);
      for (int i = 0; i <= N; ++i)
        t.B[t.idx3(k, i, j)] =
            poly_integrate_definite(poly_mul(pkj, phi[static_cast<std::size_t>(i)]));
    }

  for (int i = 0; i <= N; ++i)
    for (int k = 0; k <= N; ++k)
      t.D[t.idx2(i, k)] = poly_integrate_definite(
          poly_mul(dphi[static_cast<std::size_t>(i)], dphi[static_cast<std::size_t>(k)]));

  return t;
}

} // namespace

const MomentTensors& moment_tensors(int N) {
  if (N < 0 || N > kMaxBasisOrder)
    throw ConfigError("moment tensors: order out of range [0, " +
                      std::to_string(kMaxBasisOrder) +
                      "]: " + std::to_string(N));
  static std::array<MomentTensors, kMaxBasisOrder + 1> cache = [] {
    std::array<MomentTensors, kMaxBasisOrder + 1> c;
    for (int i = 0; i <= kMaxBasisOrder; ++i) c[static_cast<std::size_t>(i)] = build_tensors(i);
    return c;
  }();
  return cache[static_cast<std::size_t>(N)];
}

double eval_basis(int k, double zeta) {
  // Horner evaluation of the double-converted coefficients.
  static const std::array<std::vector<double>, kMaxBasisOrder + 1> dcoeff = [] {
    std::array<std::vector<double>, kMaxBasisOrder + 1> d;
    for (int k2 = 0; k2 <= kMaxBasisOrder; ++k2) {
      for (const auto& c : legendre_shifted(k2).coeff)
        d[static_cast<std::size_t>(k2)].push_back(to_double(c));
    }
    return d;
  }();
  if (k < 0 || k > kMaxBasisOrder)
    throw ConfigError("basis order out of range [0, " +
                      std::to_string(kMaxBasisOrder) +
                      "]: " + std::to_string(k));
  const auto& c = dcoeff[static_cast<std::size_t>(k)];
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * zeta + *it;
  return r;
}

std::vector<double> eval_basis_all(int N, double zeta) {
  std::vector<double> v(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) v[static_cast<std::size_t>(k)] = eval_basis(k, zeta);
  return v;
}

} // namespace stratus
