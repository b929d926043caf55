// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Symbolic transformations: differentiation, substitution, constant
// folding, and algebraic simplification.
#include <cmath>

#include "stratus/expr.hpp"

namespace stratus {

namespace {

bool all_constant(const std::vector<Expr>& kids) {
  for (const auto& k : kids)
    if (!k.is_constant()) return false;
  return true;
}

bool all_exact(const std::vector<Expr>& kids) {
  for (const auto& k : kids)
    if (!k.node().exact) return false;
  return true;
}

/// Fold an operation whose children are all constants. Exactness is
/// preserved where the operation is closed over the rationals.
Expr fold_op(const ExprNode& n, const std::vector<Expr>& kids) {
  switch (n.kind) {
    case ExprKind::add: {
      if (all_exact(kids)) {
        Rational r = 0;
        for (const auto& k : kids) r += k.node().rvalue;
        return Expr::rational(std::move(r));
      }
      double r = kids[0].constant_value();
      for (std::size_t i = 1; i < kids.size(); ++i) r += kids[i].constant_value();
      return Expr::real(r);
    }
    case ExprKind::mul: {
      if (all_exact(kids)) {
        Rational r = 1;
        for (const auto& k : kids) r *= k.node().rvalue;
        return Expr::rational(std::move(r));
      }
      double r = kids[0].constant_value();
      for (std::size_t i = 1; i < kids.size(); ++i) r *= kids[i].constant_value();
      return Expr::real(r);
    }
    case ExprKind::div: {
      if (all_exact(kids) && kids[1].node().rvalue != 0)
        return Expr::rational(kids[0].node().rvalue / kids[1].node().rvalue);
      return Expr::real(kids[0].constant_value() / kids[1].constant_value());
    }
    case ExprKind::pow_int: {
      const auto& base = kids[0].node();
      if (base.exact && !(base.rvalue == 0 && n.exponent < 0)) {
        Rational r = 1;
        const Rational b = n.exponent < 0 ? Rational(1) / base.rvalue : base.rvalue;
        const int e = n.exponent < 0 ? -n.exponent : n.exponent;
        for (int i = 0; i < e; ++i) r *= b;
        return Expr::rational(std::move(r));
      }
      return Expr::real(ipow(base.dvalue, n.exponent));
    }
    case ExprKind::sqrt_fn:
      return Expr::real(std::sqrt(kids[0].constant_value()));
    case ExprKind::abs_fn: {
      const auto& k = kids[0].node();
      return k.exact ? Expr::rational(k.rvalue < 0 ? -k.rvalue : k.rvalue)
                     : Expr::real(std::fabs(k.dvalue));
    }
    case ExprKind::min_fn:
      if (all_exact(kids))
        return kids[0].node().rvalue < kids[1].node().rvalue ? kids[0] : kids[1];
      return kids[0].constant_value() < kids[1].constant_value() ? kids[0]
                                                                 : kids[1];
    case ExprKind::max_fn:
      if (all_exact(kids))
        return kids[0].node().rvalue > kids[1].node().rvalue ? kids[0] : kids[1];
      return kids[0].constant_value() > kids[1].constant_value() ? kids[0]
                                                                 : kids[1];
    case ExprKind::cmp: {
      bool v = false;
      if (all_exact(kids)) {
        const Rational& l = kids[0].node().rvalue;
        const Rational& r = kids[1].node().rvalue;
        switch (n.cop) {
          case CmpOp::lt: v = l < r; break;
          case CmpOp::le: v = l <= r; break;
          case CmpOp::gt: v = l > r; break;
          case CmpOp::ge: v = l >= r; break;
        }
      } else {
        const double l = kids[0].constant_value();
        const double r = kids[1].constant_value();
        switch (n.cop) {
          case CmpOp::lt: v = l < r; break;
          case CmpOp::le: v = l <= r; break;
          case CmpOp::gt: v = l > r; break;
          case CmpOp::ge: v = l >= r; break;
        }
      }
      return Expr::integer(v ? 1 : 0);
    }
    default:
      break;
  }
  throw NumericsError("constant folding: unexpected node kind");
}

/// Rebuild a node over new children, folding when everything is constant.
Expr rebuild(const ExprNode& n, std::vector<Expr> kids) {
  if (n.kind != ExprKind::piecewise && !kids.empty() && all_constant(kids))
    return fold_op(n, kids);
  switch (n.kind) {
    case ExprKind::add: return Expr::add(std::move(kids));
    case ExprKind::mul: return Expr::mul(std::move(kids));
    case ExprKind::div: return Expr::div(kids[0], kids[1]);
    case ExprKind::pow_int: return Expr::pow(kids[0], n.exponent);
    case ExprKind::sqrt_fn: return Expr::sqrt(kids[0]);
    case ExprKind::abs_fn: return Expr::abs(kids[0]);
    case ExprKind::min_fn: return Expr::min(kids[0], kids[1]);
    case ExprKind::max_fn: return Expr::max(kids[0], kids[1]);
    case ExprKind::cmp: return Expr::compare(n.cop, kids[0], kids[1]);
    case ExprKind::piecewise: {
      // Prune constant conditions: drop false branches, stop at the
      // first true one.
      std::vector<std::pair<Expr, Expr>> branches;
      const std::size_t pairs = kids.size() / 2;
      for (std::size_t i = 0; i < pairs; ++i) {
        Expr c = kids[2 * i];
        Expr v = kids[2 * i + 1];
        if (c.is_constant()) {
          if (c.constant_value() != 0.0)
            return Expr::piecewise(std::move(branches), std::move(v));
          continue; // constant-false branch: unreachable
        }
        branches.emplace_back(std::move(c), std::move(v));
      }
      return Expr::piecewise(std::move(branches), kids.back());
    }
    default:
      throw NumericsError("rebuild: unexpected node kind");
  }
}

} // namespace

Expr differentiate(const Expr& e, Slot s, int index) {
  struct Impl {
    Slot s;
    int index;
    Expr d(const Expr& e) const {
      const ExprNode& n = e.node();
      switch (n.kind) {
        case ExprKind::constant:
          return Expr::integer(0);
        case ExprKind::variable:
          return Expr::integer(n.slot == s && n.index == index ? 1 : 0);
        case ExprKind::add: {
          std::vector<Expr> kids;
          kids.reserve(n.kids.size());
          for (const auto& k : n.kids) kids.push_back(d(k));
          return Expr::add(std::move(kids));
        }
        case ExprKind::mul: {
          // n-ary product rule.
          std::vector<Expr> terms;
          for (std::size_t i = 0; i < n.kids.size(); ++i) {
            std::vector<Expr> factors = n.kids;
            factors[i] = d(n.kids[i]);
            terms.push_back(Expr::mul(std::move(factors)));
          }
          return Expr::add(std::move(terms));
        }
        case ExprKind::div: {
          const Expr& a = n.kids[0];
          const Expr& b = n.kids[1];
          return Expr::div(d(a) * b - a * d(b), Expr::pow(b, 2));
        }
        case ExprKind::pow_int:
          return Expr::integer(n.exponent) *
                 Expr::pow(n.kids[0], n.exponent - 1) * d(n.kids[0]);
        case ExprKind::sqrt_fn:
          return Expr::div(d(n.kids[0]), Expr::integer(2) * Expr::sqrt(n.kids[0]));
        case ExprKind::abs_fn:
          return Expr::piecewise(
              {{Expr::compare(CmpOp::ge, n.kids[0], Expr::integer(0)),
                d(n.kids[0])}},
              -d(n.kids[0]));
        case ExprKind::min_fn:
          return Expr::piecewise(
              {{Expr::compare(CmpOp::le, n.kids[0], n.kids[1]), d(n.kids[0])}},
              d(n.kids[1]));
        case ExprKind::max_fn:
          return Expr::piecewise(
              {{Expr::compare(CmpOp::ge, n.kids[0], n.kids[1]), d(n.kids[0])}},
              d(n.kids[1]));
        case ExprKind::cmp:
          return Expr::integer(0);
        case ExprKind::piecewise: {
          std::vector<std::pair<Expr, Expr>> branches;
          const std::size_t pairs = n.kids.size() / 2;
          for (std::size_t i = 0; i < pairs; ++i)
            branches.emplace_back(n.kids[2 * i], d(n.kids[2 * i + 1]));
          return Expr::piecewise(std::move(branches), d(n.kids.back()));
        }
      }
      throw NumericsError("differentiate: corrupt expression node");
    }
  };
  return simplify(Impl{s, index}.d(e));
}

Expr differentiate(const Expr& e, const Expr& var) {
  if (var.kind() != ExprKind::variable)
    throw ConfigError("differentiate: second argument must be a variable");
  return differentiate(e, var.node().slot, var.node().index);
}

std::vector<std::vector<Expr>> jacobian(const std::vector<Expr>& F,
                                        int n_state) {
  std::vector<std::vector<Expr>> J(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) {
    J[i].reserve(static_cast<std::size_t>(n_state));
    for (int j = 0; j < n_state; ++j)
      J[i].push_back(differentiate(F[i], Slot::state, j));
  }
  return J;
}

Expr substitute(const Expr& e, const SubstitutionMap& bindings) {
  const ExprNode& n = e.node();
  if (n.kind == ExprKind::variable) {
    // Replacements are taken verbatim: substitution is simultaneous and
    // never re-applied inside a replacement.
    const auto it = bindings.find({n.slot, n.index});
    return it != bindings.end() ? it->second : e;
  }
  if (n.kids.empty()) return e;
  std::vector<Expr> kids;
  kids.reserve(n.kids.size());
  for (const auto& k : n.kids) kids.push_back(substitute(k, bindings));
  return rebuild(n, std::move(kids));
}

Expr simplify(const Expr& e) {
  const ExprNode& n = e.node();
  if (n.kids.empty()) return e;

  std::vector<Expr> kids;
  kids.reserve(n.kids.size());
  for (const auto& k : n.kids) kids.push_back(simplify(k));

  switch (n.kind) {
    case ExprKind::add: {
      // Merge constants; drop additive zeros. The merged constant, when
      // it survives, goes last ("x + 1").
      std::vector<Expr> out;
      std::vector<Expr> consts;
      for (auto& k : kids) {
        // Expr::add re-flattens nested sums produced by child rewrites.
        if (k.is_constant())
          consts.push_back(std::move(k));
        else
          out.push_back(std::move(k));
      }
      if (!consts.empty()) {
        ExprNode tmp;
        tmp.kind = ExprKind::add;
        Expr c = consts.size() == 1 ? consts[0] : fold_op(tmp, consts);
        if (!(c.node().exact && c.node().rvalue == 0)) out.push_back(std::move(c));
      }
      return Expr::add(std::move(out));
    }
    case ExprKind::mul: {
      std::vector<Expr> out;
      std::vector<Expr> consts;
      for (auto& k : kids) {
        if (k.is_constant())
          consts.push_back(std::move(k));
        else
          out.push_back(std::move(k));
      }
      if (!consts.empty()) {
        ExprNode tmp;
        tmp.kind = ExprKind::mul;
        Expr c = consts.size() == 1 ? consts[0] : fold_op(tmp, consts);
        if (c.node().exact && c.node().rvalue == 0) return c; // x · 0 → 0
        // The coefficient, when not 1, goes first ("2 * x").
        if (!(c.node().exact && c.node().rvalue == 1))
          out.insert(out.begin(), std::move(c));
      }
      return Expr::mul(std::move(out));
    }
    case ExprKind::div:
      if (kids[1].is_exact_constant(1)) return kids[0]; // x / 1 → x
      return rebuild(n, std::move(kids));
    case ExprKind::pow_int:
      if (n.exponent == 1) return kids[0]; // x^1 → x
      if (n.exponent == 0) return Expr::integer(1); // x^0 → 1
      return rebuild(n, std::move(kids));
    default:
      return rebuild(n, std::move(kids));
  }
}

} // namespace stratus
