// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#include "stratus/expr.hpp"

#include <algorithm>
#include <cmath>

namespace stratus {

double ipow(double base, int exponent) {
  // Exponentiation by squaring; the tape backends replicate this exact
  // operation sequence so results are bit-identical across backends.
  const bool negative = exponent < 0;
  unsigned m = negative ? static_cast<unsigned>(-(long long)exponent)
                        : static_cast<unsigned>(exponent);
  double result = 1.0;
  double b = base;
  while (m != 0) {
    if (m & 1u) result *= b;
    b *= b;
    m >>= 1u;
  }
  return negative ? 1.0 / result : result;
}

Expr Expr::make(ExprNode n) {
  return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr::Expr() : Expr(rational(Rational(0))) {}

Expr Expr::rational(Rational r) {
  ExprNode n;
  n.kind = ExprKind::constant;
  n.exact = true;
  n.dvalue = to_double(r);
  n.rvalue = std::move(r);
  return make(std::move(n));
}

Expr Expr::rational(long long num, long long den) {
  return rational(Rational(num, den));
}

Expr Expr::integer(long long v) { return rational(Rational(v)); }

Expr Expr::real(double v) {
  ExprNode n;
  n.kind = ExprKind::constant;
  n.exact = false;
  n.dvalue = v;
  return make(std::move(n));
}

Expr Expr::variable(Slot s, int index) {
  if (index < 0) throw ConfigError("variable index must be non-negative");
  ExprNode n;
  n.kind = ExprKind::variable;
  n.slot = s;
  n.index = index;
  return make(std::move(n));
}

Expr Expr::add(std::vector<Expr> kids) {
  // Sums are kept flat (n-ary, left-fold order); nested sums inline.
  std::vector<Expr> flat;
  flat.reserve(kids.size());
  for (auto& k : kids) {
    if (k.kind() == ExprKind::add)
      flat.insert(flat.end(), k.node().kids.begin(), k.node().kids.end());
    else
      flat.push_back(std::move(k));
  }
  if (flat.empty()) return integer(0);
  if (flat.size() == 1) return flat[0];
  ExprNode n;
  n.kind = ExprKind::add;
  n.kids = std::move(flat);
  return make(std::move(n));
}

Expr Expr::mul(std::vector<Expr> kids) {
  std::vector<Expr> flat;
  flat.reserve(kids.size());
  for (auto& k : kids) {
    if (k.kind() == ExprKind::mul)
      flat.insert(flat.end(), k.node().kids.begin(), k.node().kids.end());
    else
      flat.push_back(std::move(k));
  }
  if (flat.empty()) return integer(1);
  if (flat.size() == 1) return flat[0];
  ExprNode n;
  n.kind = ExprKind::mul;
  n.kids = std::move(flat);
  return make(std::move(n));
}

Expr Expr::div(Expr num, Expr den) {
  ExprNode n;
  n.kind = ExprKind::div;
  n.kids = {std::move(num), std::move(den)};
  return make(std::move(n));
}

Expr Expr::pow(Expr base, int exponent) {
  ExprNode n;
  n.kind = ExprKind::pow_int;
  n.exponent = exponent;
  n.kids = {std::move(base)};
  return make(std::move(n));
}

Expr Expr::sqrt(Expr x) {
  ExprNode n;
  n.kind = ExprKind::sqrt_fn;
  n.kids = {std::move(x)};
  return make(std::move(n));
}

Expr Expr::abs(Expr x) {
  ExprNode n;
  n.kind = ExprKind::abs_fn;
  n.kids = {std::move(x)};
  return make(std::move(n));
}

Expr Expr::min(Expr a, Expr b) {
  ExprNode n;
  n.kind = ExprKind::min_fn;
  n.kids = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Expr Expr::max(Expr a, Expr b) {
  ExprNode n;
  n.kind = ExprKind::max_fn;
  n.kids = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Expr Expr::compare(CmpOp op, Expr lhs, Expr rhs) {
  ExprNode n;
  n.kind = ExprKind::cmp;
  n.cop = op;
  n.kids = {std::move(lhs), std::move(rhs)};
  return make(std::move(n));
}

Expr Expr::piecewise(std::vector<std::pair<Expr, Expr>> branches,
                     Expr otherwise) {
  // Chains stay flat: a piecewise fall-through inlines its branches.
  std::vector<Expr> kids;
  kids.reserve(branches.size() * 2 + 1);
  for (auto& [c, v] : branches) {
    kids.push_back(std::move(c));
    kids.push_back(std::move(v));
  }
  if (otherwise.kind() == ExprKind::piecewise) {
    const auto& ok = otherwise.node().kids;
    kids.insert(kids.end(), ok.begin(), ok.end());
  } else {
    kids.push_back(std::move(otherwise));
  }
  if (kids.size() == 1) return kids[0];
  ExprNode n;
  n.kind = ExprKind::piecewise;
  n.kids = std::move(kids);
  return make(std::move(n));
}

bool Expr::is_exact_constant(long long v) const {
  return node_->kind == ExprKind::constant && node_->exact &&
         node_->rvalue == v;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.raw() == b.raw()) return true;
  const ExprNode& x = a.node();
  const ExprNode& y = b.node();
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case ExprKind::constant:
      if (x.exact != y.exact) return false;
      return x.exact ? (x.rvalue == y.rvalue) : (x.dvalue == y.dvalue);
    case ExprKind::variable:
      return x.slot == y.slot && x.index == y.index;
    case ExprKind::pow_int:
      if (x.exponent != y.exponent) return false;
      break;
    case ExprKind::cmp:
      if (x.cop != y.cop) return false;
      break;
    default:
      break;
  }
  if (x.kids.size() != y.kids.size()) return false;
  for (std::size_t i = 0; i < x.kids.size(); ++i)
    if (!(x.kids[i] == y.kids[i])) return false;
  return true;
}

namespace {

Expr negate(const Expr& e) {
  if (e.is_constant()) {
    const ExprNode& n = e.node();
    return n.exact ? Expr::rational(-n.rvalue) : Expr::real(-n.dvalue);
  }
  return Expr::mul({Expr::integer(-1), e});
}

} // namespace

Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::add({a, negate(b)}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::div(a, b); }
Expr operator-(const Expr& a) { return negate(a); }
Expr operator+(const Expr& a, double b) { return a + Expr::real(b); }
Expr operator+(double a, const Expr& b) { return Expr::real(a) + b; }
Expr operator-(const Expr& a, double b) { return a - Expr::real(b); }
Expr operator-(double a, const Expr& b) { return Expr::real(a) - b; }
Expr operator*(const Expr& a, double b) { return a * Expr::real(b); }
Expr operator*(double a, const Expr& b) { return Expr::real(a) * b; }
Expr operator/(const Expr& a, double b) { return a / Expr::real(b); }
Expr operator/(double a, const Expr& b) { return Expr::real(a) / b; }

Expr state_var(int i) { return Expr::variable(Slot::state, i); }
Expr aux_var(int i) { return Expr::variable(Slot::aux, i); }
Expr param_var(int i) { return Expr::variable(Slot::param, i); }
Expr coord_x() { return Expr::variable(Slot::coord, 0); }
Expr coord_y() { return Expr::variable(Slot::coord, 1); }
Expr ghost_distance() { return Expr::variable(Slot::coord, 2); }
Expr normal_x() { return Expr::variable(Slot::normal, 0); }
Expr normal_y() { return Expr::variable(Slot::normal, 1); }
Expr time_var() { return Expr::variable(Slot::time, 0); }

namespace {

const char* kReservedNames[] = {"x",  "y",   "t",   "nx",  "ny",
                                "dist", "sqrt", "abs", "min", "max"};

void check_name(const std::string& name) {
  if (name.empty()) throw ConfigError("variable layout: empty name");
  for (const char* r : kReservedNames)
    if (name == r)
      throw ConfigError("variable layout: name '" + name +
                        "' collides with a built-in identifier");
}

} // namespace

VariableLayout::VariableLayout(std::vector<std::string> state_,
                               std::vector<std::string> aux_,
                               std::vector<std::string> params_)
    : VariableLayout(std::move(state_), std::move(aux_), std::move(params_),
                     {}, 1) {}

VariableLayout::VariableLayout(std::vector<std::string> state_,
                               std::vector<std::string> aux_,
                               std::vector<std::string> params_,
                               std::vector<double> param_defaults_,
                               int dimension_)
    : state(std::move(state_)),
      aux(std::move(aux_)),
      params(std::move(params_)),
      param_defaults(std::move(param_defaults_)),
      dimension(dimension_) {
  if (dimension != 1 && dimension != 2)
    throw ConfigError("variable layout: dimension must be 1 or 2");
  param_defaults.resize(params.size(), 0.0);
  std::vector<std::string> all;
  for (const auto* v : {&state, &aux, &params})
    for (const auto& n : *v) {
      check_name(n);
      all.push_back(n);
    }
  std::sort(all.begin(), all.end());
  const auto dup = std::adjacent_find(all.begin(), all.end());
  if (dup != all.end())
    throw ConfigError("variable layout: duplicate name '" + *dup + "'");
}

std::optional<std::pair<Slot, int>> VariableLayout::find(
    std::string_view name) const {
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i] == name) return std::pair{Slot::state, static_cast<int>(i)};
  for (std::size_t i = 0; i < aux.size(); ++i)
    if (aux[i] == name) return std::pair{Slot::aux, static_cast<int>(i)};
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i] == name) return std::pair{Slot::param, static_cast<int>(i)};
  return std::nullopt;
}

std::string VariableLayout::name_of(Slot s, int index) const {
  const auto at = [index](const std::vector<std::string>& v,
                          const char* what) -> std::string {
    if (index < 0 || static_cast<std::size_t>(index) >= v.size())
      throw ConfigError(std::string("layout has no ") + what + "[" +
                        std::to_string(index) + "]");
    return v[static_cast<std::size_t>(index)];
  };
  switch (s) {
    case Slot::state: return at(state, "state");
    case Slot::aux: return at(aux, "aux");
    case Slot::param: return at(params, "param");
    case Slot::coord:
      if (index == 0) return "x";
      if (index == 1) return "y";
      if (index == 2) return "dist";
      throw ConfigError("coordinate index out of range");
    case Slot::normal:
      if (index == 0) return "nx";
      if (index == 1) return "ny";
      throw ConfigError("normal index out of range");
    case Slot::time: return "t";
  }
  throw ConfigError("invalid slot");
}

namespace {

int index_in(const std::vector<std::string>& v, std::string_view name,
             const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == name) return static_cast<int>(i);
  throw ConfigError(std::string("layout has no ") + what + " named '" +
                    std::string(name) + "'");
}

} // namespace

int VariableLayout::state_index(std::string_view name) const {
  return index_in(state, name, "state field");
}
int VariableLayout::aux_index(std::string_view name) const {
  return index_in(aux, name, "aux field");
}
int VariableLayout::param_index(std::string_view name) const {
  return index_in(params, name, "parameter");
}

namespace {

[[noreturn]] void unbound(Slot s, int index) {
  const char* cls = "";
  switch (s) {
    case Slot::state: cls = "state"; break;
    case Slot::aux: cls = "aux"; break;
    case Slot::param: cls = "param"; break;
    case Slot::coord: cls = "coord"; break;
    case Slot::normal: cls = "normal"; break;
    case Slot::time: cls = "time"; break;
  }
  throw NumericsError(std::string("evaluation: unbound variable ") + cls +
                      "[" + std::to_string(index) + "]");
}

double lookup(Slot s, int index, const EvalBindings& b) {
  const auto from_span = [&](std::span<const double> v) {
    if (v.empty() || static_cast<std::size_t>(index) >= v.size())
      unbound(s, index);
    return v[static_cast<std::size_t>(index)];
  };
  switch (s) {
    case Slot::state: return from_span(b.state);
    case Slot::aux: return from_span(b.aux);
    case Slot::param: return from_span(b.params);
    case Slot::normal: return from_span(b.normal);
    case Slot::coord:
      if (index == 0) { if (!b.x) unbound(s, index); return *b.x; }
      if (index == 1) { if (!b.y) unbound(s, index); return *b.y; }
      if (index == 2) { if (!b.dist) unbound(s, index); return *b.dist; }
      unbound(s, index);
    case Slot::time:
      if (!b.t) unbound(s, index);
      return *b.t;
  }
  unbound(s, index);
}

} // namespace

double eval_expr(const Expr& e, const EvalBindings& b) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::constant:
      return n.dvalue;
    case ExprKind::variable:
      return lookup(n.slot, n.index, b);
    case ExprKind::add: {
      double r = eval_expr(n.kids[0], b);
      for (std::size_t i = 1; i < n.kids.size(); ++i) r += eval_expr(n.kids[i], b);
      return r;
    }
    case ExprKind::mul: {
      double r = eval_expr(n.kids[0], b);
      for (std::size_t i = 1; i < n.kids.size(); ++i) r *= eval_expr(n.kids[i], b);
      return r;
    }
    case ExprKind::div:
      return eval_expr(n.kids[0], b) / eval_expr(n.kids[1], b);
    case ExprKind::pow_int:
      return ipow(eval_expr(n.kids[0], b), n.exponent);
    case ExprKind::sqrt_fn:
      return std::sqrt(eval_expr(n.kids[0], b));
    case ExprKind::abs_fn:
      return std::fabs(eval_expr(n.kids[0], b));
    case ExprKind::min_fn: {
      const double a = eval_expr(n.kids[0], b);
      const double c = eval_expr(n.kids[1], b);
      return a < c ? a : c;
    }
    case ExprKind::max_fn: {
      const double a = eval_expr(n.kids[0], b);
      const double c = eval_expr(n.kids[1], b);
      return a > c ? a : c;
    }
    case ExprKind::cmp: {
      const double l = eval_expr(n.kids[0], b);
      const double r = eval_expr(n.kids[1], b);
      bool v = false;
      switch (n.cop) {
        case CmpOp::lt: v = l < r; break;
        case CmpOp::le: v = l <= r; break;
        case CmpOp::gt: v = l > r; break;
        case CmpOp::ge: v = l >= r; break;
      }
      return v ? 1.0 : 0.0;
    }
    case ExprKind::piecewise: {
      const std::size_t pairs = n.kids.size() / 2;
      for (std::size_t i = 0; i < pairs; ++i)
        if (eval_expr(n.kids[2 * i], b) != 0.0)
          return eval_expr(n.kids[2 * i + 1], b);
      return eval_expr(n.kids.back(), b);
    }
  }
  throw NumericsError("evaluation: corrupt expression node");
}

} // namespace stratus
