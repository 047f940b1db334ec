#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qpx/types.hpp"

namespace qpx {

// Small expression grammar for configuration files. One complex-valued AST;
// real-valued expressions are the subset whose evaluation has negligible
// imaginary part (validated on samples at load).
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' integer)?
//   unary  := '-' unary | atom
//   atom   := number | 'i' | identifier | identifier '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: exp, re, im, abs2, log1p_abs2, log, theta1.
// Identifiers otherwise name chart coordinates.
class Expr {
public:
  virtual ~Expr() = default;
  virtual Complex eval(const CVector& coords) const = 0;
  // True when the expression is holomorphic in the coordinates (required for
  // the f_j of an analytic singularity).
  virtual bool holomorphic() const = 0;
};

using ExprPtr = std::shared_ptr<const Expr>;

struct ExprContext {
  std::vector<std::string> coord_names;
  Complex tau = Complex(0.0, 1.0); // modulus used by theta1
};

ExprPtr parse_expression(const std::string& text, const ExprContext& ctx);

// Truncated Jacobi theta_1(z | tau); holomorphic, vanishes on the lattice.
Complex theta1(Complex z, Complex tau, int terms = 12);

} // namespace qpx
