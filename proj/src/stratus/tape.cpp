// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#include "stratus/tape.hpp"

#include <cmath>
#include <unordered_map>

namespace stratus {

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok;
#else
  return false;
#endif
}

namespace {

class TapeBuilder {
public:
  TapeBuilder(const VariableLayout& layout) : layout_(layout) {}

  std::int32_t lower(const Expr& e) {
    const auto hit = memo_.find(e.raw());
    if (hit != memo_.end()) return hit->second;
    const std::int32_t reg = emit(e);
    memo_.emplace(e.raw(), reg);
    return reg;
  }

  std::vector<TapeInstr> code;
  int n_regs = 0;
  unsigned used_mask = 0;

private:
  std::int32_t fresh() { return n_regs++; }

  std::int32_t instr(TapeOp op, std::int32_t a = 0, std::int32_t b = 0,
                     std::int32_t c = 0, double cval = 0.0) {
    const std::int32_t dst = fresh();
    code.push_back(TapeInstr{op, dst, a, b, c, cval});
    return dst;
  }

  void mark(Slot s) { used_mask |= 1u << static_cast<unsigned>(s); }

  std::int32_t lower_variable(const ExprNode& n) {
    mark(n.slot);
    const auto in_range = [&](int count, const char* what) {
      if (n.index >= count)
        throw ConfigError(std::string("compile: expression references ") +
                          what + "[" + std::to_string(n.index) +
                          "] outside the layout (size " +
                          std::to_string(count) + ")");
    };
    switch (n.slot) {
      case Slot::state:
        in_range(layout_.n_state(), "state");
        return instr(TapeOp::kLoadState, n.index);
      case Slot::aux:
        in_range(layout_.n_aux(), "aux");
        return instr(TapeOp::kLoadAux, n.index);
      case Slot::param:
        in_range(layout_.n_params(), "param");
        return instr(TapeOp::kLoadParam, n.index);
      case Slot::coord:
        in_range(3, "coord");
        if (n.index == 0) return instr(TapeOp::kLoadX);
        if (n.index == 1) return instr(TapeOp::kLoadY);
        return instr(TapeOp::kLoadDist);
      case Slot::normal:
        in_range(2, "normal");
        return instr(n.index == 0 ? TapeOp::kLoadNx : TapeOp::kLoadNy);
      case Slot::time:
        in_range(1, "time");
        return instr(TapeOp::kLoadT);
    }
    throw ConfigError("compile: corrupt variable node");
  }

  std::int32_t emit(const Expr& e) {
    const ExprNode& n = e.node();
    switch (n.kind) {
      case ExprKind::constant:
        return instr(TapeOp::kConst, 0, 0, 0, n.dvalue);
      case ExprKind::variable:
        return lower_variable(n);
      case ExprKind::add: {
        // left-fold chain, matching the interpreter's evaluation order
        std::int32_t acc = lower(n.kids[0]);
        for (std::size_t i = 1; i < n.kids.size(); ++i)
          acc = instr(TapeOp::kAdd, acc, lower(n.kids[i]));
        return acc;
      }
      case ExprKind::mul: {
        std::int32_t acc = lower(n.kids[0]);
        for (std::size_t i = 1; i < n.kids.size(); ++i)
          acc = instr(TapeOp::kMul, acc, lower(n.kids[i]));
        return acc;
      }
      case ExprKind::div:
        return instr(TapeOp::kDiv, lower(n.kids[0]), lower(n.kids[1]));
      case ExprKind::pow_int:
        return instr(TapeOp::kPowi, lower(n.kids[0]), n.exponent);
      case ExprKind::sqrt_fn:
        return instr(TapeOp::kSqrt, lower(n.kids[0]));
      case ExprKind::abs_fn:
        return instr(TapeOp::kAbs, lower(n.kids[0]));
      case ExprKind::min_fn:
        return instr(TapeOp::kMin, lower(n.kids[0]), lower(n.kids[1]));
      case ExprKind::max_fn:
        return instr(TapeOp::kMax, lower(n.kids[0]), lower(n.kids[1]));
      case ExprKind::cmp: {
        TapeOp op = TapeOp::kCmpLt;
        switch (n.cop) {
          case CmpOp::lt: op = TapeOp::kCmpLt; break;
          case CmpOp::le: op = TapeOp::kCmpLe; break;
          case CmpOp::gt: op = TapeOp::kCmpGt; break;
          case CmpOp::ge: op = TapeOp::kCmpGe; break;
        }
        return instr(op, lower(n.kids[0]), lower(n.kids[1]));
      }
      case ExprKind::piecewise: {
        // Lower every branch (selects evaluate both sides), then chain
        // selects from the last condition back to the first so the first
        // true condition wins.
        const std::size_t pairs = n.kids.size() / 2;
        std::vector<std::int32_t> conds(pairs), vals(pairs);
        for (std::size_t i = 0; i < pairs; ++i) {
          conds[i] = lower(n.kids[2 * i]);
          vals[i] = lower(n.kids[2 * i + 1]);
        }
        std::int32_t acc = lower(n.kids.back());
        for (std::size_t i = pairs; i-- > 0;)
          acc = instr(TapeOp::kSelect, conds[i], vals[i], acc);
        return acc;
      }
    }
    throw ConfigError("compile: corrupt expression node");
  }

  const VariableLayout& layout_;
  std::unordered_map<const ExprNode*, std::int32_t> memo_;
};

[[noreturn]] void unbound(const char* what) {
  throw NumericsError(std::string("kernel evaluation: unbound input: ") + what);
}

} // namespace

Kernel compile_kernel(const std::vector<Expr>& exprs,
                      const VariableLayout& layout) {
  TapeBuilder b(layout);
  Kernel k;
  k.outputs_.reserve(exprs.size());
  for (const auto& e : exprs) k.outputs_.push_back(b.lower(e));
  k.code_ = std::move(b.code);
  k.n_regs_ = b.n_regs;
  k.used_mask_ = b.used_mask;
  return k;
}

void Kernel::eval_point(const PointInputs& in, double* out) const {
  if (uses(Slot::state) && in.state == nullptr) unbound("state");
  if (uses(Slot::aux) && in.aux == nullptr) unbound("aux");
  if (uses(Slot::param) && in.params == nullptr) unbound("params");
  if (uses(Slot::normal) && in.normal == nullptr) unbound("normal");

  std::vector<double> r(static_cast<std::size_t>(n_regs_));
  for (const TapeInstr& i : code_) {
    double v = 0.0;
    switch (i.op) {
      case TapeOp::kConst: v = i.cval; break;
      case TapeOp::kLoadState: v = in.state[i.a]; break;
      case TapeOp::kLoadAux: v = in.aux[i.a]; break;
      case TapeOp::kLoadParam: v = in.params[i.a]; break;
      case TapeOp::kLoadX:
        if (!in.x) unbound("x");
        v = *in.x;
        break;
      case TapeOp::kLoadY:
        if (!in.y) unbound("y");
        v = *in.y;
        break;
      case TapeOp::kLoadDist:
        if (!in.dist) unbound("dist");
        v = *in.dist;
        break;
      case TapeOp::kLoadNx: v = in.normal[0]; break;
      case TapeOp::kLoadNy: v = in.normal[1]; break;
      case TapeOp::kLoadT:
        if (!in.t) unbound("t");
        v = *in.t;
        break;
      case TapeOp::kAdd: v = r[i.a] + r[i.b]; break;
      case TapeOp::kMul: v = r[i.a] * r[i.b]; break;
      case TapeOp::kDiv: v = r[i.a] / r[i.b]; break;
      case TapeOp::kPowi: v = ipow(r[i.a], i.b); break;
      case TapeOp::kSqrt: v = std::sqrt(r[i.a]); break;
      case TapeOp::kAbs: v = std::fabs(r[i.a]); break;
      case TapeOp::kMin: v = r[i.a] < r[i.b] ? r[i.a] : r[i.b]; break;
      case TapeOp::kMax: v = r[i.a] > r[i.b] ? r[i.a] : r[i.b]; break;
      case TapeOp::kCmpLt: v = r[i.a] < r[i.b] ? 1.0 : 0.0; break;
      case TapeOp::kCmpLe: v = r[i.a] <= r[i.b] ? 1.0 : 0.0; break;
      case TapeOp::kCmpGt: v = r[i.a] > r[i.b] ? 1.0 : 0.0; break;
      case TapeOp::kCmpGe: v = r[i.a] >= r[i.b] ? 1.0 : 0.0; break;
      case TapeOp::kSelect: v = r[i.a] != 0.0 ? r[i.b] : r[i.c]; break;
    }
    r[static_cast<std::size_t>(i.dst)] = v;
  }
  for (std::size_t i = 0; i < outputs_.size(); ++i)
    out[i] = r[static_cast<std::size_t>(outputs_[i])];
}

void Kernel::check_batch_inputs(const CellBatch& in) const {
  if (uses(Slot::state) && in.state == nullptr) unbound("state");
  if (uses(Slot::aux) && in.aux == nullptr) unbound("aux");
  if (uses(Slot::param) && in.params == nullptr) unbound("params");
  if (uses(Slot::normal))
    unbound("normal (not available in batched evaluation)");
  if (uses(Slot::time) && !in.t) unbound("t");
}

void Kernel::eval_cells_scalar(const CellBatch& in, std::size_t begin,
                               std::size_t end, double* out,
                               std::size_t out_stride) const {
  check_batch_inputs(in);
  std::vector<double> r(static_cast<std::size_t>(n_regs_));
  for (std::size_t cell = begin; cell < end; ++cell) {
    for (const TapeInstr& i : code_) {
      double v = 0.0;
      switch (i.op) {
        case TapeOp::kConst: v = i.cval; break;
        case TapeOp::kLoadState: v = in.state[i.a * in.stride + cell]; break;
        case TapeOp::kLoadAux: v = in.aux[i.a * in.stride + cell]; break;
        case TapeOp::kLoadParam: v = in.params[i.a]; break;
        case TapeOp::kLoadX:
          if (in.cx == nullptr) unbound("x");
          v = in.cx[cell];
          break;
        case TapeOp::kLoadY:
          if (in.cy == nullptr) unbound("y");
          v = in.cy[cell];
          break;
        case TapeOp::kLoadDist: unbound("dist");
        case TapeOp::kLoadNx: unbound("nx");
        case TapeOp::kLoadNy: unbound("ny");
        case TapeOp::kLoadT: v = *in.t; break;
        case TapeOp::kAdd: v = r[i.a] + r[i.b]; break;
        case TapeOp::kMul: v = r[i.a] * r[i.b]; break;
        case TapeOp::kDiv: v = r[i.a] / r[i.b]; break;
        case TapeOp::kPowi: v = ipow(r[i.a], i.b); break;
        case TapeOp::kSqrt: v = std::sqrt(r[i.a]); break;
        case TapeOp::kAbs: v = std::fabs(r[i.a]); break;
        case TapeOp::kMin: v = r[i.a] < r[i.b] ? r[i.a] : r[i.b]; break;
        case TapeOp::kMax: v = r[i.a] > r[i.b] ? r[i.a] : r[i.b]; break;
        case TapeOp::kCmpLt: v = r[i.a] < r[i.b] ? 1.0 : 0.0; break;
        case TapeOp::kCmpLe: v = r[i.a] <= r[i.b] ? 1.0 : 0.0; break;
        case TapeOp::kCmpGt: v = r[i.a] > r[i.b] ? 1.0 : 0.0; break;
        case TapeOp::kCmpGe: v = r[i.a] >= r[i.b] ? 1.0 : 0.0; break;
        case TapeOp::kSelect: v = r[i.a] != 0.0 ? r[i.b] : r[i.c]; break;
      }
      r[static_cast<std::size_t>(i.dst)] = v;
    }
    for (std::size_t i = 0; i < outputs_.size(); ++i)
      out[i * out_stride + cell] = r[static_cast<std::size_t>(outputs_[i])];
  }
}

void Kernel::eval_cells_avx2(const CellBatch& in, std::size_t begin,
                             std::size_t end, double* out,
                             std::size_t out_stride) const {
  if (!avx2_available())
    throw UnsupportedError("AVX2 backend requested on a CPU without AVX2");
  if ((end - begin) % 4 != 0)
    throw ConfigError("AVX2 backend: cell range must be a multiple of 4");
  check_batch_inputs(in);
  detail::tape_exec_avx2(code_, outputs_, n_regs_, in, begin, end, out,
                         out_stride);
}

void Kernel::eval_cells(const CellBatch& in, std::size_t begin,
                        std::size_t end, double* out,
                        std::size_t out_stride) const {
  std::size_t split = begin;
  if (avx2_available() && end - begin >= 4)
    split = begin + (end - begin) / 4 * 4;
  if (split > begin) eval_cells_avx2(in, begin, split, out, out_stride);
  if (split < end) eval_cells_scalar(in, split, end, out, out_stride);
}

} // namespace stratus
