// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Expression text format. Grammar, loosest to tightest binding:
//   ternary     :  or_else '?' ternary ':' ternary      (right-assoc)
//   comparison  :  additive (('<'|'<='|'>'|'>=') additive)?
//   additive    :  term (('+'|'-') term)*
//   term        :  unary (('*'|'/') unary)*
//   unary       :  '-' unary | power
//   power       :  atom ('^' signed-integer)?
//   atom        :  number | identifier | fn '(' args ')' | '(' ternary ')'
// Integer literals parse to exact rational constants; decimal or
// scientific literals to double constants. A quotient of two exact
// constants folds to an exact rational at parse time, so "(1/3)" is the
// textual form of the rational constant 1/3.
#include <cctype>
#include <cstdlib>

#include "stratus/expr.hpp"

namespace stratus {

namespace {

enum class Tok { number, ident, op, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t offset = 0;
  bool is_integer = false; // number tokens: no '.', no exponent
};

class Lexer {
public:
  explicit Lexer(std::string_view s) : s_(s) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, tok_.offset);
  }

private:
  void advance() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= s_.size()) {
      tok_.kind = Tok::end;
      return;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t e = pos_;
      while (e < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[e])) || s_[e] == '_'))
        ++e;
      tok_.kind = Tok::ident;
      tok_.text = std::string(s_.substr(pos_, e - pos_));
      pos_ = e;
      return;
    }
    static const std::string two_char[] = {"<=", ">="};
    for (const auto& op : two_char)
      if (s_.substr(pos_).starts_with(op)) {
        tok_.kind = Tok::op;
        tok_.text = op;
        pos_ += 2;
        return;
      }
    if (std::string("+-*/^()<>?:,").find(c) != std::string::npos) {
      tok_.kind = Tok::op;
      tok_.text = std::string(1, c);
      ++pos_;
      return;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
  }

  void lex_number() {
    std::size_t e = pos_;
    bool has_dot = false, has_exp = false;
    while (e < s_.size() && std::isdigit(static_cast<unsigned char>(s_[e]))) ++e;
    if (e < s_.size() && s_[e] == '.') {
      has_dot = true;
      ++e;
      while (e < s_.size() && std::isdigit(static_cast<unsigned char>(s_[e]))) ++e;
    }
    if (e < s_.size() && (s_[e] == 'e' || s_[e] == 'E')) {
      std::size_t m = e + 1;
      if (m < s_.size() && (s_[m] == '+' || s_[m] == '-')) ++m;
      if (m < s_.size() && std::isdigit(static_cast<unsigned char>(s_[m]))) {
        has_exp = true;
        ++m;
        while (m < s_.size() && std::isdigit(static_cast<unsigned char>(s_[m])))
          ++m;
        e = m;
      }
    }
    tok_.kind = Tok::number;
    tok_.text = std::string(s_.substr(pos_, e - pos_));
    tok_.is_integer = !has_dot && !has_exp;
    pos_ = e;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  Token tok_;
};

class Parser {
public:
  Parser(std::string_view text, const VariableLayout& layout)
      : lex_(text), layout_(layout) {}

  Expr parse() {
    Expr e = ternary();
    if (lex_.peek().kind != Tok::end)
      lex_.fail("unexpected token '" + lex_.peek().text + "'");
    return e;
  }

private:
  bool at_op(const char* t) const {
    return lex_.peek().kind == Tok::op && lex_.peek().text == t;
  }

  void expect_op(const char* t) {
    if (!at_op(t)) lex_.fail(std::string("expected '") + t + "'");
    lex_.take();
  }

  Expr ternary() {
    Expr cond = comparison();
    if (!at_op("?")) return cond;
    lex_.take();
    Expr then = ternary();
    expect_op(":");
    Expr otherwise = ternary();
    return Expr::piecewise({{cond, then}}, otherwise);
  }

  Expr comparison() {
    Expr lhs = additive();
    CmpOp op;
    if (at_op("<")) op = CmpOp::lt;
    else if (at_op("<=")) op = CmpOp::le;
    else if (at_op(">")) op = CmpOp::gt;
    else if (at_op(">=")) op = CmpOp::ge;
    else return lhs;
    lex_.take();
    return Expr::compare(op, lhs, additive());
  }

  Expr additive() {
    std::vector<Expr> terms{term()};
    while (at_op("+") || at_op("-")) {
      const bool minus = lex_.peek().text == "-";
      lex_.take();
      Expr t = term();
      terms.push_back(minus ? -t : t);
    }
    return terms.size() == 1 ? terms[0] : Expr::add(std::move(terms));
  }

  Expr term() {
    std::vector<Expr> factors{unary()};
    while (at_op("*") || at_op("/")) {
      const bool divide = lex_.peek().text == "/";
      lex_.take();
      Expr rhs = unary();
      if (divide) {
        Expr num = factors.size() == 1 ? factors[0] : Expr::mul(std::move(factors));
        // Exact constant quotients fold so rationals round-trip as "(a/b)".
        if (num.is_constant() && num.node().exact && rhs.is_constant() &&
            rhs.node().exact && !(rhs.node().rvalue == 0))
          num = Expr::rational(num.node().rvalue / rhs.node().rvalue);
        else
          num = Expr::div(num, rhs);
        factors.clear();
        factors.push_back(std::move(num));
      } else {
        factors.push_back(std::move(rhs));
      }
    }
    return factors.size() == 1 ? factors[0] : Expr::mul(std::move(factors));
  }

  Expr unary() {
    if (at_op("-")) {
      lex_.take();
      return -unary();
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (!at_op("^")) return base;
    lex_.take();
    return Expr::pow(base, exponent_literal());
  }

  int exponent_literal() {
    // The exponent must denote an integer: a literal, optionally signed,
    // optionally parenthesized.
    bool paren = false;
    if (at_op("(")) {
      paren = true;
      lex_.take();
    }
    bool neg = false;
    if (at_op("-")) {
      neg = true;
      lex_.take();
    }
    const Token t = lex_.peek();
    if (t.kind != Tok::number || !t.is_integer)
      lex_.fail("exponent must be an integer literal");
    lex_.take();
    const long v = std::strtol(t.text.c_str(), nullptr, 10);
    if (paren) expect_op(")");
    return static_cast<int>(neg ? -v : v);
  }

  Expr atom() {
    const Token t = lex_.peek();
    if (t.kind == Tok::number) {
      lex_.take();
      if (t.is_integer) return Expr::rational(Rational(BigInt(t.text)));
      return Expr::real(std::strtod(t.text.c_str(), nullptr));
    }
    if (t.kind == Tok::ident) {
      lex_.take();
      if (t.text == "sqrt" || t.text == "abs") {
        expect_op("(");
        Expr a = ternary();
        expect_op(")");
        return t.text == "sqrt" ? Expr::sqrt(a) : Expr::abs(a);
      }
      if (t.text == "min" || t.text == "max") {
        expect_op("(");
        Expr a = ternary();
        expect_op(",");
        Expr b = ternary();
        expect_op(")");
        return t.text == "min" ? Expr::min(a, b) : Expr::max(a, b);
      }
      if (t.text == "x") return coord_x();
      if (t.text == "y") return coord_y();
      if (t.text == "dist") return ghost_distance();
      if (t.text == "t") return time_var();
      if (t.text == "nx") return normal_x();
      if (t.text == "ny") return normal_y();
      if (const auto hit = layout_.find(t.text))
        return Expr::variable(hit->first, hit->second);
      throw SyntaxError("unknown identifier '" + t.text + "'", t.offset);
    }
    if (t.kind == Tok::op && t.text == "(") {
      lex_.take();
      Expr e = ternary();
      expect_op(")");
      return e;
    }
    lex_.fail(t.kind == Tok::end ? "unexpected end of input"
                                 : "unexpected token '" + t.text + "'");
  }

  Lexer lex_;
  const VariableLayout& layout_;
};

// ----------------------------------------------------------------------
// Printing. Precedence levels: piecewise 0, comparison 1, additive 2,
// multiplicative 3, atoms 5. A child is parenthesized when its level is
// below what its position requires.

int precedence(const ExprNode& n) {
  switch (n.kind) {
    case ExprKind::piecewise: return 0;
    case ExprKind::cmp: return 1;
    case ExprKind::add: return 2;
    case ExprKind::mul:
      // A product with a leading exact -1 prints with a prefix minus and
      // binds like an additive term.
      return (n.kids[0].is_exact_constant(-1) && n.kids.size() >= 2) ? 2 : 3;
    case ExprKind::div: return 3;
    case ExprKind::pow_int: return 4;
    default: return 5;
  }
}

std::string print_rec(const Expr& e, const VariableLayout& layout, int min_prec);

std::string paren_if(const std::string& s, bool wrap) {
  return wrap ? "(" + s + ")" : s;
}

std::string print_constant(const ExprNode& n) {
  if (n.exact) {
    const BigInt num = boost::multiprecision::numerator(n.rvalue);
    const BigInt den = boost::multiprecision::denominator(n.rvalue);
    if (den == 1) return num.str();
    return "(" + num.str() + " / " + den.str() + ")";
  }
  std::string s = format_g17(n.dvalue);
  // Integer-looking doubles get a ".0" marker so they re-parse as doubles
  // rather than exact constants.
  if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
  return s;
}

/// True for constants with negative value (printed with a leading '-').
bool prints_negative(const ExprNode& n) {
  return n.kind == ExprKind::constant &&
         (n.exact ? n.rvalue < 0 : n.dvalue < 0);
}

std::string print_mul(const ExprNode& n, const VariableLayout& layout) {
  // A leading exact -1 coefficient prints as a prefix minus.
  std::size_t first = 0;
  std::string head;
  if (n.kids[0].is_exact_constant(-1) && n.kids.size() >= 2) {
    head = "-";
    first = 1;
  }
  std::string s = head;
  for (std::size_t i = first; i < n.kids.size(); ++i) {
    if (i > first) s += " * ";
    // Division kids after the first position would re-associate
    // ((a*b)/c instead of a*(b/c)), so they get parentheses there.
    const int need = (i == first) ? 3 : 4;
    s += print_rec(n.kids[i], layout, need);
  }
  return s;
}

std::string print_rec(const Expr& e, const VariableLayout& layout,
                      int min_prec) {
  const ExprNode& n = e.node();
  const int prec = precedence(n);
  switch (n.kind) {
    case ExprKind::constant:
      return paren_if(print_constant(n),
                      prints_negative(n) && min_prec > 2);
    case ExprKind::variable:
      return layout.name_of(n.slot, n.index);
    case ExprKind::add: {
      std::string s = print_rec(n.kids[0], layout, 2);
      for (std::size_t i = 1; i < n.kids.size(); ++i) {
        const ExprNode& k = n.kids[i].node();
        if (prints_negative(k)) {
          // negate the constant textually
          ExprNode pos = k;
          if (k.exact) { pos.rvalue = -k.rvalue; pos.dvalue = -k.dvalue; }
          else pos.dvalue = -k.dvalue;
          s += " - " + print_constant(pos);
        } else if (k.kind == ExprKind::mul &&
                   k.kids[0].is_exact_constant(-1) && k.kids.size() >= 2) {
          ExprNode rest = k;
          rest.kids.erase(rest.kids.begin());
          s += " - ";
          s += rest.kids.size() == 1 ? print_rec(rest.kids[0], layout, 3)
                                     : print_mul(rest, layout);
        } else {
          s += " + " + print_rec(n.kids[i], layout, 3);
        }
      }
      return paren_if(s, prec < min_prec);
    }
    case ExprKind::mul:
      return paren_if(print_mul(n, layout), prec < min_prec);
    case ExprKind::div: {
      std::string s = print_rec(n.kids[0], layout, 3) + " / " +
                      print_rec(n.kids[1], layout, 4);
      return paren_if(s, prec < min_prec);
    }
    case ExprKind::pow_int: {
      std::string s = print_rec(n.kids[0], layout, 5) + " ^ " +
                      std::to_string(n.exponent);
      return paren_if(s, prec < min_prec);
    }
    case ExprKind::sqrt_fn:
      return "sqrt(" + print_rec(n.kids[0], layout, 0) + ")";
    case ExprKind::abs_fn:
      return "abs(" + print_rec(n.kids[0], layout, 0) + ")";
    case ExprKind::min_fn:
      return "min(" + print_rec(n.kids[0], layout, 0) + ", " +
             print_rec(n.kids[1], layout, 0) + ")";
    case ExprKind::max_fn:
      return "max(" + print_rec(n.kids[0], layout, 0) + ", " +
             print_rec(n.kids[1], layout, 0) + ")";
    case ExprKind::cmp: {
      const char* op = "<";
      switch (n.cop) {
        case CmpOp::lt: op = "<"; break;
        case CmpOp::le: op = "<="; break;
        case CmpOp::gt: op = ">"; break;
        case CmpOp::ge: op = ">="; break;
      }
      std::string s = print_rec(n.kids[0], layout, 2) + " " + op + " " +
                      print_rec(n.kids[1], layout, 2);
      return paren_if(s, prec < min_prec);
    }
    case ExprKind::piecewise: {
      std::string s;
      const std::size_t pairs = n.kids.size() / 2;
      for (std::size_t i = 0; i < pairs; ++i)
        s += print_rec(n.kids[2 * i], layout, 1) + " ? " +
             print_rec(n.kids[2 * i + 1], layout, 1) + " : ";
      s += print_rec(n.kids.back(), layout, 1);
      return paren_if(s, prec < min_prec);
    }
  }
  throw NumericsError("print: corrupt expression node");
}

} // namespace

Expr parse_expr(std::string_view text, const VariableLayout& layout) {
  return Parser(text, layout).parse();
}

std::string to_string(const Expr& e, const VariableLayout& layout) {
  return print_rec(e, layout, 0);
}

} // namespace stratus
