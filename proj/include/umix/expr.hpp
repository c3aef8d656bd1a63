#pragma once
// Tiny arithmetic grammar for potentials and roofs over symbol variables x0..x99.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | xN | theta | pi | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: exp, log, sqrt, abs, sin, cos, eq(a,b) (1 when equal), sum(n, body) is not
// supported; write sums out explicitly.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "umix/error.hpp"

namespace umix {

class Expr {
 public:
  Expr() = default;

  static Expr parse(const std::string& text) {
    Expr e;
    Parser p{text, 0, &e};
    e.root_ = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    return e;
  }

  /// Largest variable index referenced, or -1.
  int max_var() const { return max_var_; }

  /// Evaluate with x_j = symbols[j] and the given theta.
  double eval(const std::vector<int>& symbols, double theta) const {
    return eval_node(*root_, symbols, theta);
  }

 private:
  enum class Op { Num, Var, Theta, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sqrt, Abs, Sin, Cos, Eq };
  struct Node {
    Op op;
    double value = 0.0;
    int var = 0;
    std::vector<std::shared_ptr<Node>> kids;
  };
  using P = std::shared_ptr<Node>;

  struct Parser {
    const std::string& s;
    size_t pos;
    Expr* owner;

    [[noreturn]] void fail(const std::string& why) const {
      throw Error(Errc::MalformedExpression, why + " at offset " + std::to_string(pos) + " in '" + s + "'");
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    static P make(Op op, std::vector<P> kids = {}) {
      auto n = std::make_shared<Node>();
      n->op = op;
      n->kids = std::move(kids);
      return n;
    }
    P parse_expr() {
      P left = parse_term();
      for (;;) {
        if (accept('+')) left = make(Op::Add, {left, parse_term()});
        else if (accept('-')) left = make(Op::Sub, {left, parse_term()});
        else return left;
      }
    }
    P parse_term() {
      P left = parse_unary();
      for (;;) {
        if (accept('*')) left = make(Op::Mul, {left, parse_unary()});
        else if (accept('/')) left = make(Op::Div, {left, parse_unary()});
        else return left;
      }
    }
    P parse_unary() {
      if (accept('-')) return make(Op::Neg, {parse_unary()});
      if (accept('+')) return parse_unary();
      return parse_power();
    }
    P parse_power() {
      P base = parse_primary();
      if (accept('^')) return make(Op::Pow, {base, parse_unary()});
      return base;
    }
    P parse_primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of expression");
      char c = s[pos];
      if (c == '(') {
        ++pos;
        P e = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (...) {
          fail("bad number");
        }
        pos += used;
        auto n = make(Op::Num);
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        std::string name = s.substr(start, pos - start);
        if (name.size() >= 2 && name[0] == 'x' &&
            name.find_first_not_of("0123456789", 1) == std::string::npos) {
          int idx = std::stoi(name.substr(1));
          if (idx > 99) fail("variable index above 99");
          auto n = make(Op::Var);
          n->var = idx;
          owner->max_var_ = std::max(owner->max_var_, idx);
          return n;
        }
        if (name == "theta") return make(Op::Theta);
        if (name == "pi") {
          auto n = make(Op::Num);
          n->value = std::numbers::pi;
          return n;
        }
        Op op;
        size_t arity = 1;
        if (name == "exp") op = Op::Exp;
        else if (name == "log") op = Op::Log;
        else if (name == "sqrt") op = Op::Sqrt;
        else if (name == "abs") op = Op::Abs;
        else if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "eq") {
          op = Op::Eq;
          arity = 2;
        } else {
          fail("unknown name '" + name + "'");
        }
        if (!accept('(')) fail("expected '(' after " + name);
        std::vector<P> args{parse_expr()};
        while (accept(',')) args.push_back(parse_expr());
        if (!accept(')')) fail("expected ')'");
        if (args.size() != arity) fail("wrong argument count for " + name);
        return make(op, std::move(args));
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  static double eval_node(const Node& n, const std::vector<int>& x, double theta) {
    auto k = [&](size_t i) { return eval_node(*n.kids[i], x, theta); };
    switch (n.op) {
      case Op::Num: return n.value;
      case Op::Var:
        if (n.var >= static_cast<int>(x.size()))
          throw Error(Errc::MalformedExpression, "variable x" + std::to_string(n.var) + " beyond evaluation window");
        return static_cast<double>(x[n.var]);
      case Op::Theta: return theta;
      case Op::Add: return k(0) + k(1);
      case Op::Sub: return k(0) - k(1);
      case Op::Mul: return k(0) * k(1);
      case Op::Div: return k(0) / k(1);
      case Op::Pow: return std::pow(k(0), k(1));
      case Op::Neg: return -k(0);
      case Op::Exp: return std::exp(k(0));
      case Op::Log: return std::log(k(0));
      case Op::Sqrt: return std::sqrt(k(0));
      case Op::Abs: return std::fabs(k(0));
      case Op::Sin: return std::sin(k(0));
      case Op::Cos: return std::cos(k(0));
      case Op::Eq: return k(0) == k(1) ? 1.0 : 0.0;
    }
    return 0.0;
  }

  P root_;
  int max_var_ = -1;
};

}  // namespace umix
