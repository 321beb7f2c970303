#include "setopt/direction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace setopt {

HessianStore init_store(int n, int p, int Q) {
  HessianStore store;
  store.n = n;
  store.p = p;
  store.Q = Q;
  const std::size_t count = static_cast<std::size_t>(p) * Q;
  store.B.assign(count, Matrix::Identity(n, n));
  store.updates.assign(count, 0);
  store.skips.assign(count, 0);
  return store;
}

BfgsReport bfgs_update(HessianStore& store, const Vector& s, const std::vector<Vector>& y,
                       double c_curv) {
  if (y.size() != store.B.size()) {
    throw Error(ErrorCode::DimensionMismatch, "need one gradient difference per (i, q) pair");
  }
  const double s_norm = s.norm();
  if (!(s_norm > 0.0)) throw Error(ErrorCode::InvalidConfig, "BFGS step s must be nonzero");
  BfgsReport report;
  for (std::size_t k = 0; k < store.B.size(); ++k) {
    const double sy = s.dot(y[k]);
    const double y_norm = y[k].norm();
    if (!(sy > 0.0) || sy < c_curv * s_norm * y_norm) {
      ++store.skips[k];
      ++report.skipped;
      report.skipped_pairs.push_back(static_cast<int>(k));
      continue;
    }
    Matrix& B = store.B[k];
    const Vector Bs = B * s;
    const double sBs = s.dot(Bs);
    if (!(sBs > 0.0)) {
      throw Error(ErrorCode::NumericalBreakdown,
                  "s^T B s <= 0 for pair " + std::to_string(k) + "; matrix is not positive definite");
    }
    B.noalias() -= (Bs * Bs.transpose()) / sBs;
    B.noalias() += (y[k] * y[k].transpose()) / sy;
    B = 0.5 * (B + B.transpose()).eval();
    ++store.updates[k];
    ++report.applied;
    const double residual = (B * s - y[k]).norm() / y_norm;
    report.max_secant_residual = std::max(report.max_secant_residual, residual);
  }
  return report;
}

bool is_spd(const Matrix& B, double symmetry_tol) {
  if (B.rows() != B.cols() || !B.allFinite()) return false;
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * scale) return false;
  Eigen::LLT<Matrix> llt(B);
  return llt.info() == Eigen::Success;
}

bool store_is_spd(const HessianStore& store) {
  return std::all_of(store.B.begin(), store.B.end(), [](const Matrix& B) { return is_spd(B); });
}

double store_min_eigenvalue(const HessianStore& store) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& B : store.B) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(B, Eigen::EigenvaluesOnly);
    lo = std::min(lo, eig.eigenvalues().minCoeff());
  }
  return lo;
}

namespace {

/// Dual state at fixed weights.
struct DualState {
  Eigen::LLT<Matrix> llt;
  Vector u;
  double dual = 0.0;
  Vector theta;
};

class MinMaxSolver {
 public:
  explicit MinMaxSolver(std::span<const QuadraticTerm> terms)
      : terms_(terms), T_(static_cast<Index>(terms.size())), n_(terms.front().g.size()) {}

  MinMaxSolution run(const InnerOptions& options, const Vector* warm) {
    Vector lambda = Vector::Constant(T_, 1.0 / static_cast<double>(T_));
    if (warm && warm->size() == T_ && (warm->array() >= 0.0).all() && warm->sum() > 0.0) {
      lambda = *warm / warm->sum();
    }

    MinMaxSolution best;
    best.phi = std::numeric_limits<double>::infinity();
    best.dual = -std::numeric_limits<double>::infinity();

    for (int it = 0; it <= options.max_iterations; ++it) {
      DualState st = evaluate(lambda);
      record(st, lambda, best);
      best.iterations = it;
      if (certified(best, options)) break;
      if (it == options.max_iterations) break;

      if (polish(st, lambda, best) && certified(best, options)) break;

      pairwise_step(st, lambda);
    }
    best.gap = std::max(0.0, best.phi - best.dual);
    best.converged = certified(best, options);
    if (best.phi > 0.0) {
      // u = 0 is always feasible with value 0.
      best.u = Vector::Zero(n_);
      best.phi = 0.0;
      best.gap = std::max(0.0, -best.dual);
    }
    return best;
  }

 private:
  static bool certified(const MinMaxSolution& s, const InnerOptions& options) {
    return s.phi - s.dual <= options.tol * std::max(1.0, std::abs(s.phi));
  }

  DualState evaluate(const Vector& lambda) const {
    Matrix H = Matrix::Zero(n_, n_);
    Vector g = Vector::Zero(n_);
    for (Index t = 0; t < T_; ++t) {
      if (lambda(t) == 0.0) continue;
      H.noalias() += lambda(t) * terms_[t].H;
      g.noalias() += lambda(t) * terms_[t].g;
    }
    DualState st;
    st.llt.compute(H);
    if (st.llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem, "H(lambda) is not positive definite");
    }
    st.u = -st.llt.solve(g);
    st.dual = 0.5 * g.dot(st.u);
    st.theta.resize(T_);
    for (Index t = 0; t < T_; ++t) st.theta(t) = terms_[t](st.u);
    return st;
  }

  static void record(const DualState& st, const Vector& lambda, MinMaxSolution& best) {
    const double primal = st.theta.maxCoeff();
    if (primal < best.phi) {
      best.phi = primal;
      best.u = st.u;
    }
    if (st.dual > best.dual) {
      best.dual = st.dual;
      best.lambda = lambda;
    }
  }

  // Pairwise Frank-Wolfe: move weight from the worst supported term to the
  // term with the largest theta, with an exact line search on phi.
  void pairwise_step(const DualState& st, Vector& lambda) const {
    Index up = 0;
    st.theta.maxCoeff(&up);
    Index down = -1;
    double lowest = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < T_; ++t) {
      if (lambda(t) > 0.0 && st.theta(t) < lowest) {
        lowest = st.theta(t);
        down = t;
      }
    }
    Vector d;
    double gamma_max = 1.0;
    if (down < 0 || down == up) {
      d = -lambda;
      d(up) += 1.0;
    } else {
      d = Vector::Zero(T_);
      d(up) = 1.0;
      d(down) = -1.0;
      gamma_max = lambda(down);
    }
    const double gamma = line_search(lambda, d, gamma_max);
    lambda += gamma * d;
    if (down >= 0 && down != up && gamma == gamma_max) lambda(down) = 0.0;
    lambda = lambda.cwiseMax(0.0);
    lambda /= lambda.sum();
  }

  // Maximizes psi(gamma) = phi(lambda + gamma d) on [0, gamma_max]; psi is concave with
  // psi' = sum_t d_t theta_t(u) and psi'' = -v^T H^{-1} v, v = sum_t d_t (g_t + H_t u).
  double line_search(const Vector& lambda, const Vector& d, double gamma_max) const {
    auto slope = [&](double gamma, double* curvature) {
      const DualState st = evaluate(lambda + gamma * d);
      Vector v = Vector::Zero(n_);
      double s = 0.0;
      for (Index t = 0; t < T_; ++t) {
        if (d(t) == 0.0) continue;
        s += d(t) * st.theta(t);
        v.noalias() += d(t) * (terms_[t].g + terms_[t].H * st.u);
      }
      if (curvature) *curvature = -v.dot(st.llt.solve(v));
      return s;
    };
    double curv = 0.0;
    const double s0 = slope(0.0, &curv);
    if (s0 <= 0.0) return 0.0;
    const double s_max = slope(gamma_max, nullptr);
    if (s_max >= 0.0) return gamma_max;
    double lo = 0.0, hi = gamma_max, gamma = 0.0, s = s0;
    for (int k = 0; k < 100; ++k) {
      double next = (curv < 0.0) ? gamma - s / curv : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      gamma = next;
      s = slope(gamma, &curv);
      if (s > 0.0) {
        lo = gamma;
      } else if (s < 0.0) {
        hi = gamma;
      } else {
        break;
      }
      if (hi - lo <= 1e-16 * gamma_max) break;
    }
    return gamma;
  }

  // Newton on the KKT system of the problem restricted to the s terms with the
  // largest theta: theta_t(u) = z on the set, sum mu_t (g_t + H_t u) = 0, sum mu = 1.
  // Accepted only when it yields a certified improvement.
  bool polish(const DualState& st, const Vector& lambda, MinMaxSolution& best) const {
    std::vector<Index> order(T_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return st.theta(a) > st.theta(b); });
    const Index max_support = std::min<Index>(n_ + 1, T_);
    bool improved = false;
    for (Index s = 1; s <= max_support; ++s) {
      std::vector<Index> active(order.begin(), order.begin() + s);
      Vector mu;
      if (!newton_kkt(active, st.u, lambda, mu)) continue;
      Vector candidate = Vector::Zero(T_);
      for (Index k = 0; k < s; ++k) candidate(active[k]) = mu(k);
      DualState trial;
      try {
        trial = evaluate(candidate);
      } catch (const Error&) {
        continue;
      }
      const double before = best.phi - best.dual;
      record(trial, candidate, best);
      if (best.phi - best.dual < before) improved = true;
      if (best.phi - best.dual <= 1e-14 * std::max(1.0, std::abs(best.phi))) break;
    }
    return improved;
  }

  bool newton_kkt(const std::vector<Index>& active, const Vector& u0, const Vector& lambda,
                  Vector& mu_out) const {
    const Index s = static_cast<Index>(active.size());
    const Index N = n_ + s + 1;
    Vector u = u0;
    Vector mu(s);
    for (Index k = 0; k < s; ++k) mu(k) = lambda(active[k]);
    if (!(mu.sum() > 0.0)) mu.setConstant(1.0);
    mu /= mu.sum();
    double z = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < s; ++k) z = std::max(z, terms_[active[k]](u));

    Vector r(N);
    Matrix J(N, N);
    double scale = 1.0;
    for (Index k = 0; k < s; ++k) scale = std::max(scale, terms_[active[k]].g.cwiseAbs().maxCoeff());
    for (int it = 0; it < 40; ++it) {
      J.setZero();
      r.setZero();
      Matrix H = Matrix::Zero(n_, n_);
      for (Index k = 0; k < s; ++k) {
        const auto& term = terms_[active[k]];
        const Vector grad = term.g + term.H * u;
        r.head(n_) += mu(k) * grad;
        H += mu(k) * term.H;
        J.block(0, n_ + k, n_, 1) = grad;
        J.block(n_ + k, 0, 1, n_) = grad.transpose();
        J(n_ + k, N - 1) = -1.0;
        r(n_ + k) = term(u) - z;
        J(N - 1, n_ + k) = 1.0;
      }
      J.topLeftCorner(n_, n_) = H;
      r(N - 1) = mu.sum() - 1.0;
      if (!r.allFinite()) return false;
      if (r.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) break;
      const Vector step = J.colPivHouseholderQr().solve(-r);
      if (!step.allFinite()) return false;
      u += step.head(n_);
      mu += step.segment(n_, s);
      z += step(N - 1);
    }
    if ((mu.array() < -1e-12).any()) return false;
    mu = mu.cwiseMax(0.0);
    if (!(mu.sum() > 0.0)) return false;
    mu_out = mu / mu.sum();
    return true;
  }

  std::span<const QuadraticTerm> terms_;
  Index T_;
  Index n_;
};

}  // namespace

MinMaxSolution solve_minmax(std::span<const QuadraticTerm> terms, const InnerOptions& options,
                            const Vector* warm) {
  if (terms.empty()) throw Error(ErrorCode::EmptyInput, "min-max subproblem without terms");
  const Index n = terms.front().g.size();
  for (const auto& t : terms) {
    if (t.g.size() != n || t.H.rows() != n || t.H.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "subproblem terms disagree on n");
    }
  }
  return MinMaxSolver(terms).run(options, warm);
}

std::vector<Matrix> scalarized_gradients(const ScalarizedComponents& sc,
                                         const std::vector<Matrix>& jacobians) {
  std::vector<Matrix> out;
  out.reserve(jacobians.size());
  for (const auto& J : jacobians) out.push_back(sc.gradients(J));
  return out;
}

std::vector<QuadraticTerm> collect_terms(const HessianStore& store,
                                         const std::vector<Matrix>& gradients,
                                         const PartitionElement& a) {
  std::vector<QuadraticTerm> terms;
  terms.reserve(a.indices.size() * static_cast<std::size_t>(store.Q));
  for (int i : a.indices) {
    for (int q = 0; q < store.Q; ++q) terms.push_back({gradients[i].col(q), store.at(i, q)});
  }
  return terms;
}

MinMaxSolution solve_for_a(const HessianStore& store, const std::vector<Matrix>& gradients,
                           const PartitionElement& a, const InnerOptions& options,
                           const Vector* warm) {
  const auto terms = collect_terms(store, gradients, a);
  return solve_minmax(terms, options, warm);
}

MinMaxSolution solve_for_a(const ScalarizedComponents& sc, const HessianStore& store,
                           const Vector& x, const PartitionElement& a,
                           const InnerOptions& options) {
  const auto& ps = sc.problem();
  std::vector<Matrix> gradients(ps.p);
  for (int i : a.indices) gradients[i] = sc.gradients(ps.jacobian(i, x));
  return solve_for_a(store, gradients, a, options);
}

SubproblemSolution solve_subproblem(const HessianStore& store, const std::vector<Matrix>& gradients,
                                    const MinimalStructure& ms, const SubproblemOptions& options,
                                    const WarmStart* warm) {
  SubproblemSolution best;
  best.phi = std::numeric_limits<double>::infinity();
  auto it = partition_iter(ms);
  while (auto a = it.next()) {
    if (best.evaluated >= options.max_partitions) {
      best.truncated = true;
      break;
    }
    const Vector* hint = (warm && warm->a == *a) ? &warm->lambda : nullptr;
    MinMaxSolution sol;
    try {
      sol = solve_for_a(store, gradients, *a, options.inner, hint);
    } catch (const Error& err) {
      std::string where = "selector (";
      for (std::size_t j = 0; j < a->indices.size(); ++j) {
        where += (j ? "," : "") + std::to_string(a->indices[j] + 1);
      }
      throw Error(err.code(), where + "): " + err.message(), err.pos());
    }
    ++best.evaluated;
    best.inner_iterations += sol.iterations;
    if (sol.phi < best.phi) {
      best.a = *a;
      best.u = std::move(sol.u);
      best.phi = sol.phi;
      best.lambda = std::move(sol.lambda);
      best.gap = sol.gap;
      best.converged = sol.converged;
    }
  }
  if (best.evaluated == 0) throw Error(ErrorCode::EmptyInput, "partition set is empty");
  return best;
}

SubproblemSolution solve_subproblem(const ScalarizedComponents& sc, const HessianStore& store,
                                    const Vector& x, const MinimalStructure& ms,
                                    const SubproblemOptions& options) {
  const auto& ps = sc.problem();
  std::vector<Matrix> gradients(ps.p);
  for (const auto& cls : ms.classes) {
    for (int i : cls.members) gradients[i] = sc.gradients(ps.jacobian(i, x));
  }
  return solve_subproblem(store, gradients, ms, options);
}

}  // namespace setopt
