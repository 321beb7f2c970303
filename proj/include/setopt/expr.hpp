#pragma once

// A small scalar expression language for problem files.
//
// Grammar, loosest to tightest binding:
//   sum     := product (('+' | '-') product)*
//   product := power (('*' | '/') power)*
//   power   := unary ('^' power)?              right associative
//   unary   := '-' unary | primary             so -x1^2 means (-x1)^2
//   primary := number | x<j> | i | pi | name '(' args ')' | '(' sum ')'
//
// x1..xn are the decision variables, i is the 1-based function index.
// Gradients come from forward-mode dual numbers, so they are exact up to
// rounding.

#include "setopt/common.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace setopt::expr {

enum class NodeKind { Constant, Variable, Parameter, Negate, Add, Sub, Mul, Div, Pow, Call };

enum class Function { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Pow, Floor };

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;       // Constant
  int variable = 0;         // Variable, 0-based
  Function function = Function::Sin;
  std::vector<int> children;
  SourcePos pos;
};

/// Value and gradient with respect to x.
struct Dual {
  double value = 0.0;
  Vector grad;
};

struct DualResult {
  double value = 0.0;
  Vector gradient;
  /// Set when abs() was differentiated at exactly 0; the subgradient 0 was used.
  bool nondifferentiable = false;
};

class Expr {
 public:
  Expr() = default;

  /// `origin` is the position of the first character of `source` in its file.
  static Expr parse(std::string_view source, int n, SourcePos origin = {1, 1});

  double eval(const Vector& x, double index) const;
  DualResult eval_dual(const Vector& x, double index) const;

  /// Fully parenthesized text that parses back to the same tree.
  std::string print() const;

  bool structurally_equal(const Expr& other) const;
  /// Sorted 0-based indices of the variables that appear.
  std::vector<int> free_variables() const;
  bool uses_parameter() const;

  int n() const { return n_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }

 private:
  friend class Parser;

  std::vector<Node> nodes_;
  int root_ = -1;
  int n_ = 0;
};

}  // namespace setopt::expr
