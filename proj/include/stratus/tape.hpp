// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stratus/expr.hpp"

namespace stratus {

/// Register-machine opcode for compiled expressions. Every backend
/// (scalar, AVX2) executes the same instruction list in the same order
/// with the same IEEE operations, so outputs are bit-identical across
/// backends.
enum class TapeOp : std::uint8_t {
  kConst,
  kLoadState,
  kLoadAux,
  kLoadParam,
  kLoadX,
  kLoadY,
  kLoadDist,
  kLoadNx,
  kLoadNy,
  kLoadT,
  kAdd,
  kMul,
  kDiv,
  kPowi, // integer exponent in field b
  kSqrt,
  kAbs,
  kMin, // (a < b) ? a : b
  kMax, // (a > b) ? a : b
  kCmpLt,
  kCmpLe,
  kCmpGt,
  kCmpGe,  // produce 1.0 / 0.0
  kSelect, // (a != 0) ? b : c  — piecewise lowers to select chains
};

struct TapeInstr {
  TapeOp op{};
  std::int32_t dst = 0;
  std::int32_t a = 0;
  std::int32_t b = 0;
  std::int32_t c = 0;
  double cval = 0.0;
};

/// Inputs for a single-point evaluation (face quadrature, boundary
/// prescriptions, per-cell setup). Null pointers / disengaged optionals
/// mean "unbound"; using one raises NumericsError.
struct PointInputs {
  const double* state = nullptr;
  const double* aux = nullptr;
  const double* params = nullptr;
  const double* normal = nullptr;
  std::optional<double> x{};
  std::optional<double> y{};
  std::optional<double> dist{};
  std::optional<double> t{};
};

/// Field-major views for batched evaluation over a contiguous cell range:
/// state value f of cell c sits at state[f * stride + c].
struct CellBatch {
  const double* state = nullptr;
  const double* aux = nullptr;
  std::size_t stride = 0;
  const double* cx = nullptr; // per-cell x coordinates
  const double* cy = nullptr; // per-cell y coordinates
  const double* params = nullptr;
  std::optional<double> t{};
};

/// True when the running CPU supports the AVX2 batch backend.
bool avx2_available();

/// Compiled evaluator for a vector of expressions. Pure: evaluation has
/// no hidden state and is safe to call concurrently over disjoint cell
/// ranges.
class Kernel {
public:
  Kernel() = default;

  int n_outputs() const { return static_cast<int>(outputs_.size()); }
  bool uses(Slot s) const { return (used_mask_ >> static_cast<unsigned>(s)) & 1u; }
  bool empty() const { return outputs_.empty(); }

  /// Scalar reference evaluation of one point; out has n_outputs slots.
  void eval_point(const PointInputs& in, double* out) const;

  /// Batched evaluation over cells [begin, end). Output value i of cell c
  /// is written to out[i * out_stride + c]. Dispatches to the widest
  /// available backend at runtime; all backends agree bitwise.
  void eval_cells(const CellBatch& in, std::size_t begin, std::size_t end,
                  double* out, std::size_t out_stride) const;

  /// Reference scalar backend (used for dispatch tails and equivalence
  /// tests).
  void eval_cells_scalar(const CellBatch& in, std::size_t begin,
                         std::size_t end, double* out,
                         std::size_t out_stride) const;

  /// AVX2 backend; end − begin must be a multiple of 4. Throws
  /// UnsupportedError when the CPU lacks AVX2.
  void eval_cells_avx2(const CellBatch& in, std::size_t begin, std::size_t end,
                       double* out, std::size_t out_stride) const;

private:
  friend Kernel compile_kernel(const std::vector<Expr>&, const VariableLayout&);

  void check_batch_inputs(const CellBatch& in) const;

  std::vector<TapeInstr> code_;
  std::vector<std::int32_t> outputs_;
  int n_regs_ = 0;
  unsigned used_mask_ = 0;
};

/// Lower expressions to a tape over the given layout. Validates that all
/// variable indices are in range.
Kernel compile_kernel(const std::vector<Expr>& exprs,
                      const VariableLayout& layout);

namespace detail {
// Defined in the AVX2 translation unit (compiled with -mavx2).
void tape_exec_avx2(const std::vector<TapeInstr>& code,
                    const std::vector<std::int32_t>& outputs, int n_regs,
                    const CellBatch& in, std::size_t begin, std::size_t end,
                    double* out, std::size_t out_stride);
} // namespace detail

} // namespace stratus
