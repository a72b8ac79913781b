#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace fbci {

enum class Op { Num, X, T, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

struct Expr::Node {
  Op op = Op::Num;
  double num = 0.0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodeP = std::shared_ptr<const Expr::Node>;

struct Dual {
  double v, d;
};

NodeP make(Op op, NodeP a = nullptr, NodeP b = nullptr, double num = 0.0) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->num = num;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodeP run() {
    NodeP e = expr();
    skip();
    if (p_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  const std::string& s_;
  size_t p_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::ExpressionError,
                "cannot parse '" + s_ + "' at offset " + std::to_string(p_) + ": " + msg);
  }

  void skip() {
    while (p_ < s_.size() && (s_[p_] == ' ' || s_[p_] == '\t' || s_[p_] == '\n')) ++p_;
  }

  // returns the operator character, mapping UTF-8 minus/times/divide onto ASCII
  char peek_op() {
    skip();
    if (p_ >= s_.size()) return '\0';
    const unsigned char c = static_cast<unsigned char>(s_[p_]);
    if (c == 0xE2 && p_ + 2 < s_.size() && static_cast<unsigned char>(s_[p_ + 1]) == 0x88 &&
        static_cast<unsigned char>(s_[p_ + 2]) == 0x92)
      return '-';
    if (c == 0xC3 && p_ + 1 < s_.size()) {
      const unsigned char d = static_cast<unsigned char>(s_[p_ + 1]);
      if (d == 0x97) return '*';
      if (d == 0xB7) return '/';
    }
    return s_[p_];
  }

  void consume_op() {
    const unsigned char c = static_cast<unsigned char>(s_[p_]);
    if (c == 0xE2) p_ += 3;
    else if (c == 0xC3) p_ += 2;
    else p_ += 1;
  }

  NodeP expr() {
    NodeP lhs = term();
    for (;;) {
      char c = peek_op();
      if (c == '+' || c == '-') {
        consume_op();
        NodeP rhs = term();
        lhs = make(c == '+' ? Op::Add : Op::Sub, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  NodeP term() {
    NodeP lhs = unary();
    for (;;) {
      char c = peek_op();
      if (c == '*' || c == '/') {
        consume_op();
        NodeP rhs = unary();
        lhs = make(c == '*' ? Op::Mul : Op::Div, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  NodeP unary() {
    char c = peek_op();
    if (c == '-') {
      consume_op();
      return make(Op::Neg, unary());
    }
    if (c == '+') {
      consume_op();
      return unary();
    }
    return power();
  }

  NodeP power() {
    NodeP base = primary();
    if (peek_op() == '^') {
      consume_op();
      NodeP ex = unary();  // right associative, allows 2^-1
      return make(Op::Pow, base, ex);
    }
    return base;
  }

  NodeP primary() {
    skip();
    if (p_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[p_];
    if (c == '(') {
      ++p_;
      NodeP e = expr();
      skip();
      if (p_ >= s_.size() || s_[p_] != ')') fail("expected ')'");
      ++p_;
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      const char* begin = s_.c_str() + p_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      p_ += static_cast<size_t>(end - begin);
      return make(Op::Num, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t q = p_;
      while (q < s_.size() && std::isalnum(static_cast<unsigned char>(s_[q]))) ++q;
      const std::string id = s_.substr(p_, q - p_);
      p_ = q;
      if (id == "x") return make(Op::X);
      if (id == "t") return make(Op::T);
      if (id == "pi") return make(Op::Num, nullptr, nullptr, std::numbers::pi);
      Op fn;
      if (id == "sin") fn = Op::Sin;
      else if (id == "cos") fn = Op::Cos;
      else if (id == "exp") fn = Op::Exp;
      else fail("unknown identifier '" + id + "'");
      skip();
      if (p_ >= s_.size() || s_[p_] != '(') fail("expected '(' after " + id);
      ++p_;
      NodeP arg = expr();
      skip();
      if (p_ >= s_.size() || s_[p_] != ')') fail("expected ')'");
      ++p_;
      return make(fn, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

// seed selects the differentiation variable: 0 -> x, 1 -> t
Dual evaluate(const Expr::Node& n, double x, double t, int seed) {
  switch (n.op) {
    case Op::Num: return {n.num, 0.0};
    case Op::X: return {x, seed == 0 ? 1.0 : 0.0};
    case Op::T: return {t, seed == 1 ? 1.0 : 0.0};
    case Op::Neg: {
      Dual a = evaluate(*n.a, x, t, seed);
      return {-a.v, -a.d};
    }
    case Op::Add: {
      Dual a = evaluate(*n.a, x, t, seed), b = evaluate(*n.b, x, t, seed);
      return {a.v + b.v, a.d + b.d};
    }
    case Op::Sub: {
      Dual a = evaluate(*n.a, x, t, seed), b = evaluate(*n.b, x, t, seed);
      return {a.v - b.v, a.d - b.d};
    }
    case Op::Mul: {
      Dual a = evaluate(*n.a, x, t, seed), b = evaluate(*n.b, x, t, seed);
      return {a.v * b.v, a.d * b.v + a.v * b.d};
    }
    case Op::Div: {
      Dual a = evaluate(*n.a, x, t, seed), b = evaluate(*n.b, x, t, seed);
      return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
    }
    case Op::Pow: {
      Dual a = evaluate(*n.a, x, t, seed), b = evaluate(*n.b, x, t, seed);
      const double v = std::pow(a.v, b.v);
      double d = 0.0;
      if (a.d != 0.0) d += (b.v == 0.0 ? 0.0 : b.v * std::pow(a.v, b.v - 1.0) * a.d);
      if (b.d != 0.0) d += v * std::log(a.v) * b.d;
      return {v, d};
    }
    case Op::Sin: {
      Dual a = evaluate(*n.a, x, t, seed);
      return {std::sin(a.v), std::cos(a.v) * a.d};
    }
    case Op::Cos: {
      Dual a = evaluate(*n.a, x, t, seed);
      return {std::cos(a.v), -std::sin(a.v) * a.d};
    }
    case Op::Exp: {
      Dual a = evaluate(*n.a, x, t, seed);
      const double e = std::exp(a.v);
      return {e, e * a.d};
    }
  }
  return {0.0, 0.0};
}

bool uses(const Expr::Node& n, Op var) {
  if (n.op == var) return true;
  return (n.a && uses(*n.a, var)) || (n.b && uses(*n.b, var));
}

}  // namespace

Expr::Expr() : root_(make(Op::Num)), src_("0") {}

Expr Expr::parse(const std::string& src) {
  Expr e;
  e.root_ = Parser(src).run();
  e.src_ = src;
  return e;
}

Expr Expr::constant(double c) {
  Expr e;
  e.root_ = make(Op::Num, nullptr, nullptr, c);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  e.src_ = buf;
  return e;
}

double Expr::eval(double x, double t) const { return evaluate(*root_, x, t, 0).v; }

void Expr::eval_dx(double x, double t, double& value, double& dx) const {
  Dual r = evaluate(*root_, x, t, 0);
  value = r.v;
  dx = r.d;
}

void Expr::eval_dt(double x, double t, double& value, double& dt) const {
  Dual r = evaluate(*root_, x, t, 1);
  value = r.v;
  dt = r.d;
}

bool Expr::uses_x() const { return uses(*root_, Op::X); }
bool Expr::uses_t() const { return uses(*root_, Op::T); }

}  // namespace fbci
