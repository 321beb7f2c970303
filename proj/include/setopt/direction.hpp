#pragma once

// Quasi-Newton direction search.
//
// Every cone-scalarized component h^{i,q} carries its own BFGS matrix B^{i,q}.
// For a selector a the direction subproblem is
//
//   min_u  max_{t = (j, q)}  theta_t(u) = g_t^T u + 1/2 u^T H_t u,
//   g_t = grad h^{a_j, q}(x),  H_t = B^{a_j, q},
//
// solved through its dual: maximize phi(lambda) = -1/2 g(lambda)^T H(lambda)^{-1} g(lambda)
// over the simplex, with g(lambda) = sum lambda_t g_t and H(lambda) = sum lambda_t H_t.
// The primal point is u(lambda) = -H(lambda)^{-1} g(lambda) and
// max_t theta_t(u) - phi(lambda) is a duality gap certificate.

#include "setopt/common.hpp"
#include "setopt/problem.hpp"
#include "setopt/setorder.hpp"

#include <span>
#include <vector>

namespace setopt {

/// One SPD matrix per (i, q) pair, stored at i * Q + q.
struct HessianStore {
  int n = 0;
  int p = 0;
  int Q = 0;
  std::vector<Matrix> B;
  std::vector<int> updates;
  std::vector<int> skips;

  const Matrix& at(int i, int q) const { return B[static_cast<std::size_t>(i) * Q + q]; }
};

HessianStore init_store(int n, int p, int Q);

struct BfgsReport {
  int applied = 0;
  int skipped = 0;
  /// max over applied pairs of |B_new s - y| / |y|.
  double max_secant_residual = 0.0;
  std::vector<int> skipped_pairs;  // flat (i * Q + q) indices
};

/// Cautious BFGS: a pair is updated only when s^T y > 0 and s^T y >= c_curv |s| |y|.
/// `y` holds grad h^{i,q}(x_{k+1}) - grad h^{i,q}(x_k) at flat index i * Q + q.
BfgsReport bfgs_update(HessianStore& store, const Vector& s, const std::vector<Vector>& y,
                       double c_curv = 1e-8);

/// True when a Cholesky factorization of the symmetric matrix succeeds.
bool is_spd(const Matrix& B, double symmetry_tol = 1e-12);
bool store_is_spd(const HessianStore& store);
double store_min_eigenvalue(const HessianStore& store);

struct QuadraticTerm {
  Vector g;
  Matrix H;

  double operator()(const Vector& u) const { return g.dot(u) + 0.5 * u.dot(H * u); }
};

struct InnerOptions {
  int max_iterations = 500;
  /// Stop once gap <= tol * max(1, |phi|).
  double tol = 1e-10;
};

struct MinMaxSolution {
  Vector u;
  double phi = 0.0;  // max_t theta_t(u)
  Vector lambda;
  double dual = 0.0;  // phi(lambda)
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes max_t theta_t(u). `warm` is used when it has one weight per term.
/// Throws SingularSystem if H(lambda) cannot be factorized.
MinMaxSolution solve_minmax(std::span<const QuadraticTerm> terms, const InnerOptions& options = {},
                            const Vector* warm = nullptr);

/// Scalarized gradients at one point: entry i is the n x Q matrix [grad h^{i,1} ... grad h^{i,Q}].
std::vector<Matrix> scalarized_gradients(const ScalarizedComponents& sc,
                                         const std::vector<Matrix>& jacobians);

/// Terms t = (j, q), j-major, for selector a.
std::vector<QuadraticTerm> collect_terms(const HessianStore& store,
                                         const std::vector<Matrix>& gradients,
                                         const PartitionElement& a);

MinMaxSolution solve_for_a(const ScalarizedComponents& sc, const HessianStore& store,
                           const Vector& x, const PartitionElement& a,
                           const InnerOptions& options = {});

MinMaxSolution solve_for_a(const HessianStore& store, const std::vector<Matrix>& gradients,
                           const PartitionElement& a, const InnerOptions& options = {},
                           const Vector* warm = nullptr);

struct SubproblemSolution {
  PartitionElement a;
  Vector u;
  double phi = 0.0;
  Vector lambda;
  double gap = 0.0;
  bool converged = true;
  int inner_iterations = 0;
  std::size_t evaluated = 0;  // selectors tried
  bool truncated = false;     // partition walk stopped at max_partitions
};

struct SubproblemOptions {
  InnerOptions inner;
  std::size_t max_partitions = 100000;
};

/// Warm-start hint: the previous selector and its dual weights.
struct WarmStart {
  PartitionElement a;
  Vector lambda;
};

/// Minimizes phi over every selector of the partition set; ties keep the first selector.
SubproblemSolution solve_subproblem(const HessianStore& store, const std::vector<Matrix>& gradients,
                                    const MinimalStructure& ms,
                                    const SubproblemOptions& options = {},
                                    const WarmStart* warm = nullptr);

SubproblemSolution solve_subproblem(const ScalarizedComponents& sc, const HessianStore& store,
                                    const Vector& x, const MinimalStructure& ms,
                                    const SubproblemOptions& options = {});

}  // namespace setopt
