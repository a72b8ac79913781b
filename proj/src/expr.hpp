#pragma once

#include <memory>
#include <string>

namespace fbci {

// Closed-form coefficient expression in x and t.
// Grammar: + - * / ^, unary minus, sin cos exp, constants and pi.
// The Unicode operators − × ÷ are accepted as aliases.
class Expr {
 public:
  struct Node;

  Expr();
  static Expr parse(const std::string& src);
  static Expr constant(double c);

  double eval(double x, double t) const;
  // value and exact partial derivative in x (forward-mode dual numbers)
  void eval_dx(double x, double t, double& value, double& dx) const;
  void eval_dt(double x, double t, double& value, double& dt) const;

  bool uses_x() const;
  bool uses_t() const;
  const std::string& source() const { return src_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string src_;
};

}  // namespace fbci
