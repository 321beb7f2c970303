#pragma once

#include "setopt/common.hpp"
#include "setopt/cone.hpp"
#include "setopt/expr.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace setopt {

/// The p vector functions f^i : R^n -> R^m of a set-valued objective.
/// Indices are 0-based here; problem files and reports use 1-based i.
class FunctionFamily {
 public:
  virtual ~FunctionFamily() = default;

  /// Writes f^i(x) into *value and its m x n Jacobian into *jacobian; either may be null.
  virtual void evaluate(int i, const Vector& x, Vector* value, Matrix* jacobian) const = 0;
};

struct SampleBox {
  Vector lo;
  Vector hi;
};

/// A set optimization problem F(x) = {f^1(x), ..., f^p(x)} ordered by a polyhedral cone.
struct Problem {
  std::string name;
  int n = 0;
  int m = 0;
  int p = 0;
  Cone cone;
  std::shared_ptr<const FunctionFamily> functions;
  SampleBox box;

  Vector value(int i, const Vector& x) const;
  Matrix jacobian(int i, const Vector& x) const;
};

/// Checks dimensions and that every function evaluates at the box center.
void validate_problem(const Problem& ps);

/// One of ex1..ex7.
Problem builtin(std::string_view name);
std::vector<std::string> builtin_names();

/// Reads a problem file; see README for the format.
Problem load_problem(const std::string& path);
Problem parse_problem(std::string_view text, const std::string& source_name = "<memory>");

/// A built-in name, or else a path to a problem file.
Problem resolve_problem(const std::string& name_or_path);

/// f^1(x), ..., f^p(x) in index order.
std::vector<Vector> eval_F(const Problem& ps, const Vector& x);

std::vector<Matrix> eval_jacobians(const Problem& ps, const Vector& x, std::span<const int> indices);
std::vector<Matrix> eval_jacobians(const Problem& ps, const Vector& x);

/// Problem family defined by m DSL expressions in x1..xn and the index i.
class ExprFamily final : public FunctionFamily {
 public:
  explicit ExprFamily(std::vector<expr::Expr> components) : components_(std::move(components)) {}
  void evaluate(int i, const Vector& x, Vector* value, Matrix* jacobian) const override;
  const std::vector<expr::Expr>& components() const { return components_; }

 private:
  std::vector<expr::Expr> components_;
};

/// Cone-scalarized scalar components h^{i,q}(x) = (A f^i(x))_q / (A e)_q.
///
/// G_e(f^i(x)) = max_q h^{i,q}(x), and grad h^{i,q} = J f^i(x)^T A_q^T / (A e)_q.
class ScalarizedComponents {
 public:
  explicit ScalarizedComponents(const Problem& ps) : ps_(&ps) {}

  int rows() const { return static_cast<int>(ps_->cone.rows()); }
  const Problem& problem() const { return *ps_; }

  /// The Q values h^{i,.} given f^i(x).
  Vector values(const Vector& fi) const { return ps_->cone.normalized() * fi; }
  /// n x Q matrix whose column q is grad h^{i,q} given J f^i(x).
  Matrix gradients(const Matrix& jacobian) const {
    return jacobian.transpose() * ps_->cone.normalized().transpose();
  }

 private:
  const Problem* ps_;
};

inline ScalarizedComponents scalarize(const Problem& ps) { return ScalarizedComponents(ps); }

}  // namespace setopt
