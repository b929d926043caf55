// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors

#include "stratus/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stratus {

namespace {

double sign_of(double magnitude, double sign_source) {
  return sign_source >= 0.0 ? std::fabs(magnitude) : -std::fabs(magnitude);
}

// Parlett-Reinsch balancing: diagonal similarity scaling by powers of two
// until every row norm and column norm are comparable.  Improves the
// accuracy of the QR iteration without changing the spectrum.
void balance(std::vector<double>& a, int n) {
  constexpr double radix = 2.0;
  bool converged = false;
  while (!converged) {
    converged = true;
    for (int i = 0; i < n; ++i) {
      double col = 0.0;
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        col += std::fabs(a[j * n + i]);
        row += std::fabs(a[i * n + j]);
      }
      if (col == 0.0 || row == 0.0) continue;
      const double total = col + row;
      double factor = 1.0;
      double g = row / radix;
      while (col < g) {
        factor *= radix;
        col *= radix * radix;
      }
      g = row * radix;
      while (col > g) {
        factor /= radix;
        col /= radix * radix;
      }
      if ((col + row) / factor < 0.95 * total) {
        converged = false;
        const double inv = 1.0 / factor;
        for (int j = 0; j < n; ++j) a[i * n + j] *= inv;
        for (int j = 0; j < n; ++j) a[j * n + i] *= factor;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form (similarity transform).
void to_hessenberg(std::vector<double>& a, int n) {
  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k + 2 < n; ++k) {
    double norm_sq = 0.0;
    for (int i = k + 1; i < n; ++i) norm_sq += a[i * n + k] * a[i * n + k];
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0) continue;
    const double alpha = a[(k + 1) * n + k] >= 0.0 ? -norm : norm;
    std::fill(u.begin(), u.end(), 0.0);
    u[k + 1] = a[(k + 1) * n + k] - alpha;
    for (int i = k + 2; i < n; ++i) u[i] = a[i * n + k];
    double u_sq = 0.0;
    for (int i = k + 1; i < n; ++i) u_sq += u[i] * u[i];
    if (u_sq == 0.0) continue;
    const double beta = 2.0 / u_sq;
    // A := P A with P = I - beta u u^T.
    for (int j = k; j < n; ++j) {
      double dot = 0.0;
      for (int i = k + 1; i < n; ++i) dot += u[i] * a[i * n + j];
      dot *= beta;
      for (int i = k + 1; i < n; ++i) a[i * n + j] -= dot * u[i];
    }
    // A := A P.
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = k + 1; j < n; ++j) dot += a[i * n + j] * u[j];
      dot *= beta;
      for (int j = k + 1; j < n; ++j) a[i * n + j] -= dot * u[j];
    }
    a[(k + 1) * n + k] = alpha;
    for (int i = k + 2; i < n; ++i) a[i * n + k] = 0.0;
  }
}

// One implicit double-shift sweep on the active window [lo, hi] of the
// Hessenberg matrix.  The two shifts are the roots of
// x^2 - shift_trace x + shift_det.
void francis_sweep(std::vector<double>& h, int n, int lo, int hi,
                   double shift_trace, double shift_det) {
  auto at = [&](int i, int j) -> double& { return h[i * n + j]; };
  double x;
  double y;
  double z;
  {
    const double h11 = at(lo, lo);
    const double h21 = at(lo + 1, lo);
    x = h11 * h11 + at(lo, lo + 1) * h21 - shift_trace * h11 + shift_det;
    y = h21 * (h11 + at(lo + 1, lo + 1) - shift_trace);
    z = (lo + 2 <= hi) ? at(lo + 2, lo + 1) * h21 : 0.0;
  }
  for (int k = lo; k <= hi - 1; ++k) {
    const bool has_z = (k + 2 <= hi);
    if (!has_z) z = 0.0;
    const double scale = std::fabs(x) + std::fabs(y) + std::fabs(z);
    if (scale != 0.0) {
      x /= scale;
      y /= scale;
      z /= scale;
    }
    const double norm = sign_of(std::sqrt(x * x + y * y + z * z), x);
    if (scale != 0.0 && norm != 0.0) {
      // Householder u = (x + norm, y, z); P = I - u u^T / (norm (x + norm))
      // maps (x, y, z) onto (-norm, 0, 0).
      const double v0 = x + norm;
      const double v1 = y;
      const double v2 = z;
      const double beta = 1.0 / (norm * v0);
      const int col_lo = (k == lo) ? lo : k - 1;
      for (int j = col_lo; j <= hi; ++j) {
        double t = v0 * at(k, j) + v1 * at(k + 1, j);
        if (has_z) t += v2 * at(k + 2, j);
        t *= beta;
        at(k, j) -= t * v0;
        at(k + 1, j) -= t * v1;
        if (has_z) at(k + 2, j) -= t * v2;
      }
      const int row_hi = std::min(hi, k + 3);
      for (int i = lo; i <= row_hi; ++i) {
        double t = v0 * at(i, k) + v1 * at(i, k + 1);
        if (has_z) t += v2 * at(i, k + 2);
        t *= beta;
        at(i, k) -= t * v0;
        at(i, k + 1) -= t * v1;
        if (has_z) at(i, k + 2) -= t * v2;
      }
      if (k > lo) {
        at(k + 1, k - 1) = 0.0;
        if (has_z) at(k + 2, k - 1) = 0.0;
      }
    }
    if (k < hi - 1) {
      x = at(k + 1, k);
      y = at(k + 2, k);
      z = (k + 3 <= hi) ? at(k + 3, k) : 0.0;
    }
  }
}

// Eigenvalues of the trailing 2x2 block [[a11,a12],[a21,a22]].
// Returns true if real; fills either (r1, r2) or (re, im).
bool eig_2x2(double a11, double a12, double a21, double a22, double* r1,
             double* r2, double* re, double* im) {
  const double mean = 0.5 * (a11 + a22);
  const double p = 0.5 * (a11 - a22);
  const double q = p * p + a12 * a21;
  if (q >= 0.0) {
    const double s = std::sqrt(q);
    const double big = mean + sign_of(s, mean);
    const double det = a11 * a22 - a12 * a21;
    *r1 = big;
    *r2 = (big != 0.0) ? det / big : mean - sign_of(s, mean);
    return true;
  }
  *re = mean;
  *im = std::sqrt(-q);
  return false;
}

}  // namespace

std::vector<double> real_eigenvalues(std::vector<double> a, int n) {
  if (n < 0 || a.size() != static_cast<std::size_t>(n) * n)
    throw ConfigError("real_eigenvalues: matrix size does not match n");
  if (n == 0) return {};
  if (n == 1) return {a[0]};

  balance(a, n);
  to_hessenberg(a, n);

  const double eps = std::numeric_limits<double>::epsilon();
  double whole_norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 1); j < n; ++j)
      whole_norm += std::fabs(a[i * n + j]);

  std::vector<double> real_parts;
  std::vector<double> imag_parts;
  real_parts.reserve(n);
  imag_parts.reserve(n);

  const int sweep_budget = 100 * n;
  int sweeps_used = 0;
  int window_sweeps = 0;
  int hi = n - 1;
  while (hi >= 0) {
    // Find the active window [lo, hi]: lo is below the first negligible
    // subdiagonal entry scanning upward from hi.
    int lo = hi;
    while (lo > 0) {
      double s = std::fabs(a[(lo - 1) * n + (lo - 1)]) + std::fabs(a[lo * n + lo]);
      if (s == 0.0) s = whole_norm;
      if (std::fabs(a[lo * n + (lo - 1)]) <= eps * s) {
        a[lo * n + (lo - 1)] = 0.0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      real_parts.push_back(a[hi * n + hi]);
      imag_parts.push_back(0.0);
      --hi;
      window_sweeps = 0;
      continue;
    }
    if (lo == hi - 1) {
      double r1 = 0.0;
      double r2 = 0.0;
      double re = 0.0;
      double im = 0.0;
      if (eig_2x2(a[lo * n + lo], a[lo * n + hi], a[hi * n + lo],
                  a[hi * n + hi], &r1, &r2, &re, &im)) {
        real_parts.push_back(r1);
        imag_parts.push_back(0.0);
        real_parts.push_back(r2);
        imag_parts.push_back(0.0);
      } else {
        real_parts.push_back(re);
        imag_parts.push_back(im);
        real_parts.push_back(re);
        imag_parts.push_back(-im);
      }
      hi -= 2;
      window_sweeps = 0;
      continue;
    }

    if (sweeps_used >= sweep_budget)
      throw NumericsError(
          "real_eigenvalues: QR iteration failed to converge within " +
          std::to_string(sweep_budget) + " sweeps");

    double shift_trace;
    double shift_det;
    if (window_sweeps > 0 && window_sweeps % 10 == 0) {
      // Exceptional ad-hoc shift to break limit cycles.
      const double s =
          std::fabs(a[hi * n + (hi - 1)]) + std::fabs(a[(hi - 1) * n + (hi - 2)]);
      const double d = 0.75 * s + a[hi * n + hi];
      shift_trace = 2.0 * d;
      shift_det = d * d + 0.4375 * s * s;
    } else {
      const double a11 = a[(hi - 1) * n + (hi - 1)];
      const double a12 = a[(hi - 1) * n + hi];
      const double a21 = a[hi * n + (hi - 1)];
      const double a22 = a[hi * n + hi];
      shift_trace = a11 + a22;
      shift_det = a11 * a22 - a12 * a21;
    }
    francis_sweep(a, n, lo, hi, shift_trace, shift_det);
    ++sweeps_used;
    ++window_sweeps;
  }

  double radius = 0.0;
  for (std::size_t i = 0; i < real_parts.size(); ++i)
    radius = std::max(radius,
                      std::sqrt(real_parts[i] * real_parts[i] +
                                imag_parts[i] * imag_parts[i]));
  for (std::size_t i = 0; i < real_parts.size(); ++i) {
    if (std::fabs(imag_parts[i]) > 1e-8 * radius)
      throw NumericsError(
          "real_eigenvalues: complex conjugate pair detected (re=" +
          format_g17(real_parts[i]) + ", im=" + format_g17(imag_parts[i]) +
          "); the quasilinear system is not hyperbolic at this state");
  }

  std::sort(real_parts.begin(), real_parts.end());
  return real_parts;
}

}  // namespace stratus
