// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stratus/common.hpp"
#include "stratus/rational.hpp"

namespace stratus {

/// Storage class a variable reads from at evaluation time.
enum class Slot : std::uint8_t {
  state,  ///< conserved/solved fields, indexed by layout order
  aux,    ///< auxiliary fields (reconstructions, persistent data)
  param,  ///< scalar model parameters
  coord,  ///< 0 = x, 1 = y, 2 = ghost distance
  normal, ///< 0 = n_x, 1 = n_y (face evaluations only)
  time,   ///< simulation time (index 0)
};

enum class ExprKind : std::uint8_t {
  constant,
  variable,
  add,  // n-ary, left-fold evaluation order
  mul,  // n-ary, left-fold evaluation order
  div,  // binary, IEEE semantics (no division guards)
  pow_int,
  sqrt_fn,
  abs_fn,
  min_fn,
  max_fn,
  cmp,
  piecewise, // [(cond, value)...] + mandatory final value
};

enum class CmpOp : std::uint8_t { lt, le, gt, ge };

class Expr;

struct ExprNode {
  ExprKind kind;
  // constant payload: `exact` constants carry a rational value; all
  // constants cache their double value.
  bool exact = false;
  Rational rvalue;
  double dvalue = 0.0;
  // variable payload
  Slot slot = Slot::state;
  int index = 0;
  // pow_int payload
  int exponent = 0;
  // cmp payload
  CmpOp cop = CmpOp::lt;
  // children; piecewise stores [c0, v0, c1, v1, ..., final]
  std::vector<Expr> kids;
};

/// Immutable value-semantics handle on a shared expression node.
class Expr {
public:
  Expr(); // rational zero

  static Expr rational(Rational r);
  static Expr rational(long long num, long long den);
  static Expr integer(long long v);
  static Expr real(double v);
  static Expr variable(Slot s, int index);
  static Expr add(std::vector<Expr> kids);
  static Expr mul(std::vector<Expr> kids);
  static Expr div(Expr num, Expr den);
  static Expr pow(Expr base, int exponent);
  static Expr sqrt(Expr x);
  static Expr abs(Expr x);
  static Expr min(Expr a, Expr b);
  static Expr max(Expr a, Expr b);
  static Expr compare(CmpOp op, Expr lhs, Expr rhs);
  /// Piecewise with first-true-condition semantics and a mandatory
  /// fall-through value; zero branches collapse to `otherwise`.
  static Expr piecewise(std::vector<std::pair<Expr, Expr>> branches,
                        Expr otherwise);

  const ExprNode& node() const { return *node_; }
  const ExprNode* raw() const { return node_.get(); }
  ExprKind kind() const { return node_->kind; }

  bool is_constant() const { return node_->kind == ExprKind::constant; }
  bool is_exact_constant(long long v) const;
  double constant_value() const { return node_->dvalue; }

private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  static Expr make(ExprNode n);
  std::shared_ptr<const ExprNode> node_;
};

/// Structural equality (exact constants compare as rationals, inexact by
/// double value).
bool operator==(const Expr& a, const Expr& b);
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);
Expr operator/(const Expr& a, double b);
Expr operator/(double a, const Expr& b);

// Convenience variable constructors.
Expr state_var(int i);
Expr aux_var(int i);
Expr param_var(int i);
Expr coord_x();
Expr coord_y();
Expr ghost_distance();
Expr normal_x();
Expr normal_y();
Expr time_var();

/// Field/parameter naming for a model. Names must be unique across all
/// three classes and must avoid the built-in identifiers
/// (x, y, t, nx, ny, dist) and function names (sqrt, abs, min, max).
struct VariableLayout {
  std::vector<std::string> state;
  std::vector<std::string> aux;
  std::vector<std::string> params;
  std::vector<double> param_defaults; // aligned with params
  int dimension = 1;                  // spatial dimension, 1 or 2

  VariableLayout() = default;
  VariableLayout(std::vector<std::string> state_, std::vector<std::string> aux_,
                 std::vector<std::string> params_);
  VariableLayout(std::vector<std::string> state_, std::vector<std::string> aux_,
                 std::vector<std::string> params_,
                 std::vector<double> param_defaults_, int dimension_);

  int n_state() const { return static_cast<int>(state.size()); }
  int n_aux() const { return static_cast<int>(aux.size()); }
  int n_params() const { return static_cast<int>(params.size()); }

  std::optional<std::pair<Slot, int>> find(std::string_view name) const;
  std::string name_of(Slot s, int index) const;
  int state_index(std::string_view name) const;  // throws if absent
  int aux_index(std::string_view name) const;    // throws if absent
  int param_index(std::string_view name) const;  // throws if absent
};

/// Values available to the tree-walking evaluator. Empty spans /
/// disengaged optionals mean "unbound"; referencing an unbound slot
/// raises NumericsError naming the variable.
struct EvalBindings {
  std::span<const double> state{};
  std::span<const double> aux{};
  std::span<const double> params{};
  std::span<const double> normal{};
  std::optional<double> x{};
  std::optional<double> y{};
  std::optional<double> dist{};
  std::optional<double> t{};
};

/// Reference interpreter (first-true piecewise branch, IEEE arithmetic).
double eval_expr(const Expr& e, const EvalBindings& b);

/// Exact partial derivative with respect to one variable. Kink choices:
/// |x| differentiates to the x ≥ 0 branch selector, min/max to their
/// tie-includes-first-argument selectors, piecewise branch-wise.
Expr differentiate(const Expr& e, Slot s, int index);

/// Overload taking a variable node; throws ConfigError otherwise.
Expr differentiate(const Expr& e, const Expr& var);

/// Jacobian of a vector expression with respect to all state slots.
std::vector<std::vector<Expr>> jacobian(const std::vector<Expr>& F,
                                        int n_state);

/// Simultaneous (non-recursive) replacement of variables by expressions,
/// followed by constant folding.
using SubstitutionMap = std::map<std::pair<Slot, int>, Expr>;
Expr substitute(const Expr& e, const SubstitutionMap& bindings);

/// Algebraic cleanup: flattens nested sums/products, folds constants,
/// removes additive zeros / multiplicative ones, collapses x·0, x^0, x^1,
/// x/1, and prunes constant-condition piecewise branches. Idempotent.
Expr simplify(const Expr& e);

/// Parse the expression grammar:
///   ternary `c ? a : b` (right-assoc) > comparisons < <= > >= >
///   additive + - > multiplicative * / > unary - > power ^ (integer
///   exponent, right-assoc) > atoms: numbers, identifiers,
///   sqrt/abs/min/max calls, parentheses.
/// Integer literals become exact rational constants; decimal/scientific
/// literals become double constants. Unknown identifiers and malformed
/// syntax raise SyntaxError with a byte offset.
Expr parse_expr(std::string_view text, const VariableLayout& layout);

/// Inverse of parse_expr up to structural equality:
/// parse(print(e)) == e for all trees the builders can produce.
std::string to_string(const Expr& e, const VariableLayout& layout);

} // namespace stratus
