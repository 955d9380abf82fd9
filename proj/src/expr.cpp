#include "hyperlock/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hyperlock {

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Func };
enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sign, Tanh, Sinh, Cosh, Atan };

struct Expr::Node {
  Op op = Op::Const;
  double value = 0;
  int var = -1;
  Fn fn = Fn::Sin;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct FnName {
  const char* name;
  Fn fn;
};
constexpr FnName kFunctions[] = {
    {"sin", Fn::Sin},   {"cos", Fn::Cos},   {"tan", Fn::Tan},   {"exp", Fn::Exp},
    {"log", Fn::Log},   {"sqrt", Fn::Sqrt}, {"abs", Fn::Abs},   {"sign", Fn::Sign},
    {"tanh", Fn::Tanh}, {"sinh", Fn::Sinh}, {"cosh", Fn::Cosh}, {"atan", Fn::Atan},
};

const char* fn_name(Fn f) {
  for (const auto& e : kFunctions)
    if (e.fn == f) return e.name;
  return "?";
}

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr make_var(int i) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Var;
  n->var = i;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

NodePtr make_fn(Fn f, NodePtr a) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Func;
  n->fn = f;
  n->a = std::move(a);
  return n;
}

NodePtr make_bin(Op op, NodePtr a, NodePtr b) {
  // light simplification so derivatives stay small
  const bool ca = a->op == Op::Const, cb = b->op == Op::Const;
  switch (op) {
    case Op::Add:
      if (is_const(a, 0)) return b;
      if (is_const(b, 0)) return a;
      if (ca && cb) return make_const(a->value + b->value);
      break;
    case Op::Sub:
      if (is_const(b, 0)) return a;
      if (ca && cb) return make_const(a->value - b->value);
      break;
    case Op::Mul:
      if (is_const(a, 0) || is_const(b, 0)) return make_const(0);
      if (is_const(a, 1)) return b;
      if (is_const(b, 1)) return a;
      if (ca && cb) return make_const(a->value * b->value);
      break;
    case Op::Div:
      if (is_const(a, 0)) return make_const(0);
      if (is_const(b, 1)) return a;
      if (ca && cb) return make_const(a->value / b->value);
      break;
    case Op::Pow:
      if (is_const(b, 0)) return make_const(1);
      if (is_const(b, 1)) return a;
      if (ca && cb) return make_const(std::pow(a->value, b->value));
      break;
    default:
      break;
  }
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_neg(NodePtr a) {
  if (a->op == Op::Const) return make_const(-a->value);
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Neg;
  n->a = std::move(a);
  return n;
}

double apply_fn(Fn f, double x) {
  switch (f) {
    case Fn::Sin: return std::sin(x);
    case Fn::Cos: return std::cos(x);
    case Fn::Tan: return std::tan(x);
    case Fn::Exp: return std::exp(x);
    case Fn::Log: return std::log(x);
    case Fn::Sqrt: return std::sqrt(x);
    case Fn::Abs: return std::abs(x);
    case Fn::Sign: return (x > 0) - (x < 0);
    case Fn::Tanh: return std::tanh(x);
    case Fn::Sinh: return std::sinh(x);
    case Fn::Cosh: return std::cosh(x);
    case Fn::Atan: return std::atan(x);
  }
  return 0;
}

double evaluate(const Expr::Node& n, std::span<const double> v) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return v[n.var];
    case Op::Neg: return -evaluate(*n.a, v);
    case Op::Add: return evaluate(*n.a, v) + evaluate(*n.b, v);
    case Op::Sub: return evaluate(*n.a, v) - evaluate(*n.b, v);
    case Op::Mul: return evaluate(*n.a, v) * evaluate(*n.b, v);
    case Op::Div: return evaluate(*n.a, v) / evaluate(*n.b, v);
    case Op::Pow: {
      const double base = evaluate(*n.a, v);
      if (n.b->op == Op::Const && n.b->value == 2) return base * base;
      return std::pow(base, evaluate(*n.b, v));
    }
    case Op::Func: return apply_fn(n.fn, evaluate(*n.a, v));
  }
  return 0;
}

NodePtr differentiate(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::Const: return make_const(0);
    case Op::Var: return make_const(n->var == var ? 1 : 0);
    case Op::Neg: return make_neg(differentiate(n->a, var));
    case Op::Add: return make_bin(Op::Add, differentiate(n->a, var), differentiate(n->b, var));
    case Op::Sub: return make_bin(Op::Sub, differentiate(n->a, var), differentiate(n->b, var));
    case Op::Mul:
      return make_bin(Op::Add, make_bin(Op::Mul, differentiate(n->a, var), n->b),
                      make_bin(Op::Mul, n->a, differentiate(n->b, var)));
    case Op::Div: {
      auto num = make_bin(Op::Sub, make_bin(Op::Mul, differentiate(n->a, var), n->b),
                          make_bin(Op::Mul, n->a, differentiate(n->b, var)));
      return make_bin(Op::Div, num, make_bin(Op::Pow, n->b, make_const(2)));
    }
    case Op::Pow: {
      auto da = differentiate(n->a, var);
      if (n->b->op == Op::Const) {
        const double p = n->b->value;
        return make_bin(Op::Mul, make_bin(Op::Mul, make_const(p), make_bin(Op::Pow, n->a, make_const(p - 1))),
                        da);
      }
      auto db = differentiate(n->b, var);
      // d(a^b) = a^b (b' log a + b a'/a)
      auto inner = make_bin(Op::Add, make_bin(Op::Mul, db, make_fn(Fn::Log, n->a)),
                            make_bin(Op::Div, make_bin(Op::Mul, n->b, da), n->a));
      return make_bin(Op::Mul, n, inner);
    }
    case Op::Func: {
      auto da = differentiate(n->a, var);
      if (is_const(da, 0)) return make_const(0);
      NodePtr outer;
      const auto& a = n->a;
      switch (n->fn) {
        case Fn::Sin: outer = make_fn(Fn::Cos, a); break;
        case Fn::Cos: outer = make_neg(make_fn(Fn::Sin, a)); break;
        case Fn::Tan:
          outer = make_bin(Op::Div, make_const(1), make_bin(Op::Pow, make_fn(Fn::Cos, a), make_const(2)));
          break;
        case Fn::Exp: outer = n; break;
        case Fn::Log: outer = make_bin(Op::Div, make_const(1), a); break;
        case Fn::Sqrt: outer = make_bin(Op::Div, make_const(0.5), n); break;
        case Fn::Abs: outer = make_fn(Fn::Sign, a); break;
        case Fn::Sign: outer = make_const(0); break;
        case Fn::Tanh:
          outer = make_bin(Op::Sub, make_const(1), make_bin(Op::Pow, n, make_const(2)));
          break;
        case Fn::Sinh: outer = make_fn(Fn::Cosh, a); break;
        case Fn::Cosh: outer = make_fn(Fn::Sinh, a); break;
        case Fn::Atan:
          outer = make_bin(Op::Div, make_const(1),
                           make_bin(Op::Add, make_const(1), make_bin(Op::Pow, a, make_const(2))));
          break;
      }
      return make_bin(Op::Mul, outer, da);
    }
  }
  return make_const(0);
}

bool depends_on_vars(const NodePtr& n) {
  if (!n) return false;
  if (n->op == Op::Var) return true;
  return depends_on_vars(n->a) || depends_on_vars(n->b);
}

void print(std::ostream& os, const NodePtr& n, const std::vector<std::string>& vars) {
  switch (n->op) {
    case Op::Const: os << n->value; return;
    case Op::Var: os << vars[n->var]; return;
    case Op::Neg: os << "(-"; print(os, n->a, vars); os << ")"; return;
    case Op::Func: os << fn_name(n->fn) << "("; print(os, n->a, vars); os << ")"; return;
    default: break;
  }
  const char* sym = n->op == Op::Add ? "+" : n->op == Op::Sub ? "-" : n->op == Op::Mul ? "*"
                  : n->op == Op::Div ? "/" : "^";
  os << "(";
  print(os, n->a, vars);
  os << sym;
  print(os, n->b, vars);
  os << ")";
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  NodePtr run() {
    auto e = expression();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExprError("expression \"" + s_ + "\", column " + std::to_string(pos_ + 1) + ": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    auto lhs = term();
    for (;;) {
      if (eat('+')) lhs = make_bin(Op::Add, lhs, term());
      else if (eat('-')) lhs = make_bin(Op::Sub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make_bin(Op::Mul, lhs, unary());
      else if (eat('/')) lhs = make_bin(Op::Div, lhs, unary());
      else return lhs;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make_neg(unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    auto base = primary();
    if (eat('^')) return make_bin(Op::Pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expression();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      for (size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == id) return make_var(static_cast<int>(i));
      if (id == "pi") return make_const(std::numbers::pi);
      for (const auto& f : kFunctions) {
        if (id == f.name) {
          if (!eat('(')) fail("expected '(' after " + id);
          auto arg = expression();
          if (!eat(')')) fail("expected ')'");
          return make_fn(f.fn, arg);
        }
      }
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  size_t pos_ = 0;
};

}  // namespace

Expr::Expr() : root_(make_const(0)) {}

Expr::Expr(std::shared_ptr<const Node> root, std::vector<std::string> vars)
    : root_(std::move(root)), vars_(std::move(vars)) {}

Expr Expr::constant(double c) { return Expr(make_const(c), {}); }

Expr Expr::parse(const std::string& text, std::vector<std::string> variables) {
  Parser p(text, variables);
  auto root = p.run();
  return Expr(root, std::move(variables));
}

double Expr::operator()(std::span<const double> values) const { return evaluate(*root_, values); }

Expr Expr::derivative(int var) const { return Expr(differentiate(root_, var), vars_); }

bool Expr::is_zero() const { return is_const(root_, 0); }

bool Expr::is_constant() const { return !depends_on_vars(root_); }

std::string Expr::str() const {
  std::ostringstream os;
  print(os, root_, vars_);
  return os.str();
}

}  // namespace hyperlock
