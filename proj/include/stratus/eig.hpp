// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Real eigenvalues of small dense matrices via balancing, Householder
// reduction to Hessenberg form, and Francis double-shift QR iteration.
#pragma once

#include <vector>

#include "stratus/common.hpp"

namespace stratus {

// Computes all eigenvalues of the n x n row-major matrix `a`, which must
// be real.  Returns them in ascending order.  Throws NumericsError if the
// iteration fails to converge within 100*n sweeps, or if a conjugate pair
// with |imaginary part| > 1e-8 * spectral radius is found (the caller
// interprets this as loss of hyperbolicity).
std::vector<double> real_eigenvalues(std::vector<double> a, int n);

}  // namespace stratus
