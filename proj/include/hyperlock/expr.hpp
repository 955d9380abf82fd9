#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperlock {

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arithmetic expression over named variables, parsed from text such as
// "0.5*cos(2*pi*t)*(1+x)". Supports + - * / ^, unary minus and
// sin cos tan exp log sqrt abs sign tanh sinh cosh atan.
class Expr {
 public:
  Expr();  // the constant 0
  static Expr constant(double c);
  static Expr parse(const std::string& text, std::vector<std::string> variables);

  double operator()(std::span<const double> values) const;
  // Symbolic partial derivative with respect to variables()[var].
  Expr derivative(int var) const;
  bool is_zero() const;
  bool is_constant() const;
  std::string str() const;
  const std::vector<std::string>& variables() const { return vars_; }

  struct Node;

 private:
  Expr(std::shared_ptr<const Node> root, std::vector<std::string> vars);
  std::shared_ptr<const Node> root_;
  std::vector<std::string> vars_;
};

}  // namespace hyperlock
