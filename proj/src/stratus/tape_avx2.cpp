// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// AVX2 batch backend, four cells per lane group. This translation unit is
// the only one compiled with -mavx2; everything else stays at the base
// ISA so the runtime dispatch in Kernel::eval_cells is the single entry
// point into this code.
//
// Bit-equivalence with the scalar backend is by construction:
//  - identical instruction order (same tape),
//  - add/mul/div/sqrt are IEEE correctly-rounded in both ISAs,
//  - no FMA contraction anywhere (-ffp-contract=off, no -mfma),
//  - min/max lower to compare+blend exactly like the scalar ternaries,
//  - abs clears the sign bit in both backends,
//  - integer powers run the same squaring loop,
//  - comparisons produce exactly 1.0/0.0, select tests cond != 0.
#include "stratus/tape.hpp"

#include <cstdint>
#include <vector>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace stratus::detail {

#if defined(__x86_64__) || defined(__i386__)

namespace {

inline __m256d powi_pd(__m256d base, std::int32_t exponent) {
  const bool negative = exponent < 0;
  unsigned m = negative ? static_cast<unsigned>(-(long long)exponent)
                        : static_cast<unsigned>(exponent);
  __m256d result = _mm256_set1_pd(1.0);
  __m256d b = base;
  while (m != 0) {
    if (m & 1u) result = _mm256_mul_pd(result, b);
    b = _mm256_mul_pd(b, b);
    m >>= 1u;
  }
  if (negative) result = _mm256_div_pd(_mm256_set1_pd(1.0), result);
  return result;
}

} // namespace

void tape_exec_avx2(const std::vector<TapeInstr>& code,
                    const std::vector<std::int32_t>& outputs, int n_regs,
                    const CellBatch& in, std::size_t begin, std::size_t end,
                    double* out, std::size_t out_stride) {
  const __m256d ones = _mm256_set1_pd(1.0);
  const __m256d zeros = _mm256_setzero_pd();
  const __m256d signmask = _mm256_set1_pd(-0.0);

  // A plain double buffer reinterpreted as registers: vector-typed template
  // arguments drop their alignment attribute, so keep __m256d out of any
  // container type and over-align the storage manually.
  const std::size_t n_doubles = static_cast<std::size_t>(n_regs) * 4;
  std::vector<double> storage(n_doubles + 4);
  const std::uintptr_t base = reinterpret_cast<std::uintptr_t>(storage.data());
  __m256d* const r =
      reinterpret_cast<__m256d*>((base + 31u) & ~std::uintptr_t{31u});
  for (std::size_t cell = begin; cell < end; cell += 4) {
    for (const TapeInstr& i : code) {
      __m256d v = zeros;
      switch (i.op) {
        case TapeOp::kConst: v = _mm256_set1_pd(i.cval); break;
        case TapeOp::kLoadState:
          v = _mm256_loadu_pd(in.state + i.a * in.stride + cell);
          break;
        case TapeOp::kLoadAux:
          v = _mm256_loadu_pd(in.aux + i.a * in.stride + cell);
          break;
        case TapeOp::kLoadParam: v = _mm256_set1_pd(in.params[i.a]); break;
        case TapeOp::kLoadX:
          if (in.cx == nullptr)
            throw NumericsError("kernel evaluation: unbound input: x");
          v = _mm256_loadu_pd(in.cx + cell);
          break;
        case TapeOp::kLoadY:
          if (in.cy == nullptr)
            throw NumericsError("kernel evaluation: unbound input: y");
          v = _mm256_loadu_pd(in.cy + cell);
          break;
        case TapeOp::kLoadDist:
          throw NumericsError("kernel evaluation: unbound input: dist");
        case TapeOp::kLoadNx:
          throw NumericsError("kernel evaluation: unbound input: nx");
        case TapeOp::kLoadNy:
          throw NumericsError("kernel evaluation: unbound input: ny");
        case TapeOp::kLoadT: v = _mm256_set1_pd(*in.t); break;
        case TapeOp::kAdd: v = _mm256_add_pd(r[i.a], r[i.b]); break;
        case TapeOp::kMul: v = _mm256_mul_pd(r[i.a], r[i.b]); break;
        case TapeOp::kDiv: v = _mm256_div_pd(r[i.a], r[i.b]); break;
        case TapeOp::kPowi: v = powi_pd(r[i.a], i.b); break;
        case TapeOp::kSqrt: v = _mm256_sqrt_pd(r[i.a]); break;
        case TapeOp::kAbs: v = _mm256_andnot_pd(signmask, r[i.a]); break;
        case TapeOp::kMin: {
          const __m256d lt = _mm256_cmp_pd(r[i.a], r[i.b], _CMP_LT_OQ);
          v = _mm256_blendv_pd(r[i.b], r[i.a], lt);
          break;
        }
        case TapeOp::kMax: {
          const __m256d gt = _mm256_cmp_pd(r[i.a], r[i.b], _CMP_GT_OQ);
          v = _mm256_blendv_pd(r[i.b], r[i.a], gt);
          break;
        }
        case TapeOp::kCmpLt:
          v = _mm256_and_pd(_mm256_cmp_pd(r[i.a], r[i.b], _CMP_LT_OQ), ones);
          break;
        case TapeOp::kCmpLe:
          v = _mm256_and_pd(_mm256_cmp_pd(r[i.a], r[i.b], _CMP_LE_OQ), ones);
          break;
        case TapeOp::kCmpGt:
          v = _mm256_and_pd(_mm256_cmp_pd(r[i.a], r[i.b], _CMP_GT_OQ), ones);
          break;
        case TapeOp::kCmpGe:
          v = _mm256_and_pd(_mm256_cmp_pd(r[i.a], r[i.b], _CMP_GE_OQ), ones);
          break;
        case TapeOp::kSelect: {
          const __m256d mask = _mm256_cmp_pd(r[i.a], zeros, _CMP_NEQ_UQ);
          v = _mm256_blendv_pd(r[i.c], r[i.b], mask);
          break;
        }
      }
      r[static_cast<std::size_t>(i.dst)] = v;
    }
    for (std::size_t i = 0; i < outputs.size(); ++i)
      _mm256_storeu_pd(out + i * out_stride + cell,
                       r[static_cast<std::size_t>(outputs[i])]);
  }
}

#else // non-x86 fallback: the dispatcher never selects this backend

void tape_exec_avx2(const std::vector<TapeInstr>&,
                    const std::vector<std::int32_t>&, int, const CellBatch&,
                    std::size_t, std::size_t, double*, std::size_t) {
  throw UnsupportedError("AVX2 backend not built for this architecture");
}

#endif

} // namespace stratus::detail
