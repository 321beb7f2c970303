#include "setopt/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace setopt {

const char* to_string(Method method) {
  return method == Method::QuasiNewton ? "qnm" : "sd";
}

const char* to_string(Status status) {
  switch (status) {
    case Status::Converged: return "Converged";
    case Status::MaxIterations: return "MaxIterations";
    case Status::LineSearchFailure: return "LineSearchFailure";
    case Status::NumericalError: return "NumericalError";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "qnm" || text == "quasi_newton") return Method::QuasiNewton;
  if (text == "sd" || text == "steepest_descent") return Method::SteepestDescent;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(text) + "' (expected qnm or sd)");
}

void SolverConfig::validate() const {
  auto open_unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
      throw Error(ErrorCode::InvalidConfig,
                  std::string(name) + " = " + std::to_string(v) + " must lie in (0,1)");
    }
  };
  open_unit(beta, "beta");
  open_unit(nu, "nu");
  if (!(eps_stop > 0.0)) throw Error(ErrorCode::InvalidConfig, "eps must be positive");
  if (max_iter < 0) throw Error(ErrorCode::InvalidConfig, "max-iter must be nonnegative");
  if (max_backtracks < 0) throw Error(ErrorCode::InvalidConfig, "max-backtracks must be nonnegative");
  if (!(tol_sub > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol_sub must be positive");
  if (!(tol_group >= 0.0) || !(tol_order >= 0.0) || !(tol_stat >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "tolerances must be nonnegative");
  }
  if (!(c_curv >= 0.0)) throw Error(ErrorCode::InvalidConfig, "c_curv must be nonnegative");
}

int IterateTrace::iterations() const {
  return records.empty() ? 0 : static_cast<int>(records.size()) - 1;
}

ArmijoResult armijo_backtrack(const Problem& ps, const Vector& x, const PartitionElement& a,
                              const Vector& u, const std::vector<Vector>& values,
                              const std::vector<Matrix>& jacobians, const SolverConfig& cfg,
                              int* violating_j) {
  const Index w = static_cast<Index>(a.indices.size());
  std::vector<Vector> slopes(w);
  for (Index j = 0; j < w; ++j) slopes[j] = jacobians[a.indices[j]] * u;

  ArmijoResult result;
  int failing = -1;
  double t = 1.0;
  for (int q = 0; q <= cfg.max_backtracks; ++q, t *= cfg.nu) {
    const Vector trial = x + t * u;
    failing = -1;
    for (Index j = 0; j < w && failing < 0; ++j) {
      const int i = a.indices[j];
      const Vector model = values[i] + cfg.beta * t * slopes[j];
      try {
        if (!leq(ps.cone, ps.value(i, trial), model, cfg.armijo_slack)) failing = static_cast<int>(j);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::DomainError) throw;
        failing = static_cast<int>(j);
      }
    }
    if (failing < 0) {
      result.t = t;
      result.q = q;
      result.x_next = trial;
      return result;
    }
  }
  if (violating_j) *violating_j = failing;
  throw Error(ErrorCode::LineSearchFailure,
              "no step after " + std::to_string(cfg.max_backtracks) + " backtracks; condition fails for j=" +
                  std::to_string(failing + 1) + " (f^" + std::to_string(a.indices[failing] + 1) + ")");
}

namespace {

double max_jacobian_norm(const std::vector<Matrix>& jacobians) {
  double out = 0.0;
  for (const auto& J : jacobians) out = std::max(out, J.norm());
  return out;
}

std::vector<Vector> gradient_differences(const std::vector<Matrix>& next, const std::vector<Matrix>& prev) {
  std::vector<Vector> y;
  for (std::size_t i = 0; i < next.size(); ++i) {
    for (Index q = 0; q < next[i].cols(); ++q) y.push_back(next[i].col(q) - prev[i].col(q));
  }
  return y;
}

}  // namespace

IterateTrace run(const Problem& ps, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  if (x0.size() != ps.n) {
    throw Error(ErrorCode::DimensionMismatch,
                "x0 has length " + std::to_string(x0.size()) + ", problem has n=" + std::to_string(ps.n));
  }
  using Clock = std::chrono::steady_clock;

  IterateTrace trace;
  trace.problem = ps.name;
  trace.method = cfg.method;

  const auto sc = scalarize(ps);
  HessianStore store = init_store(ps.n, ps.p, sc.rows());
  const bool keep_images = cfg.trace_images || ps.p * ps.m <= kImageSnapshotLimit;
  SubproblemOptions sub_options;
  sub_options.inner.tol = cfg.tol_sub;
  sub_options.max_partitions = cfg.max_partitions;

  Vector x = x0;
  std::optional<WarmStart> warm;
  IterationRecord rec;
  bool pending = false;
  try {
    std::vector<Vector> values = eval_F(ps, x);
    std::vector<Matrix> jacobians = eval_jacobians(ps, x);
    std::vector<Matrix> gradients = scalarized_gradients(sc, jacobians);

    for (int k = 0;; ++k) {
      const auto start = Clock::now();
      rec = IterationRecord{};
      pending = true;
      rec.k = k;
      rec.x = x;
      if (keep_images) rec.images = values;
      const MinimalStructure ms = analyze_minimal(ps.cone, values, cfg.tol_group, cfg.tol_order);
      rec.minimal = ms.minimal;
      rec.w = static_cast<int>(ms.w());
      rec.partitions = ms.partition_count();
      rec.varsigma = varsigma(ps.cone, values);
      rec.jacobian_norm = max_jacobian_norm(jacobians);
      rec.spd_ok = store_is_spd(store);
      rec.min_eigenvalue = store_min_eigenvalue(store);
      if (!rec.spd_ok) throw Error(ErrorCode::NumericalBreakdown, "a BFGS matrix lost positive definiteness");

      const SubproblemSolution sub =
          solve_subproblem(store, gradients, ms, sub_options, warm ? &*warm : nullptr);
      rec.a = sub.a;
      rec.u = sub.u;
      rec.u_norm = sub.u.norm();
      rec.phi = sub.phi;
      rec.gap = sub.gap;
      rec.inner_converged = sub.converged;

      if (rec.u_norm < cfg.eps_stop) {
        trace.status = Status::Converged;
      } else if (k >= cfg.max_iter) {
        trace.status = Status::MaxIterations;
      }
      if (rec.u_norm < cfg.eps_stop || k >= cfg.max_iter) {
        rec.millis = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        trace.records.push_back(std::move(rec));
        pending = false;
        break;
      }

      int violating = -1;
      ArmijoResult step;
      try {
        step = armijo_backtrack(ps, x, sub.a, sub.u, values, jacobians, cfg, &violating);
      } catch (const Error& err) {
        if (err.code() == ErrorCode::LineSearchFailure) {
          trace.violating_j = violating;
          rec.q = cfg.max_backtracks;
        }
        throw;
      }
      rec.t = step.t;
      rec.q = step.q;

      std::vector<Vector> next_values = eval_F(ps, step.x_next);
      std::vector<Matrix> next_jacobians = eval_jacobians(ps, step.x_next);
      std::vector<Matrix> next_gradients = scalarized_gradients(sc, next_jacobians);
      if (cfg.method == Method::QuasiNewton) {
        const Vector s = step.x_next - x;
        if (s.norm() > 0.0) {
          const BfgsReport report =
              bfgs_update(store, s, gradient_differences(next_gradients, gradients), cfg.c_curv);
          rec.skips = report.skipped;
          rec.secant_residual = report.max_secant_residual;
        }
      }
      rec.millis = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      warm = WarmStart{sub.a, sub.lambda};
      trace.records.push_back(std::move(rec));
      pending = false;

      x = std::move(step.x_next);
      values = std::move(next_values);
      jacobians = std::move(next_jacobians);
      gradients = std::move(next_gradients);
    }
  } catch (const Error& err) {
    trace.status = err.code() == ErrorCode::LineSearchFailure ? Status::LineSearchFailure
                                                              : Status::NumericalError;
    trace.message = err.what();
    if (pending || trace.records.empty()) {
      rec.k = static_cast<int>(trace.records.size());
      rec.x = x;
      trace.records.push_back(std::move(rec));
    }
  }
  trace.diagnostics = check_trace(ps, trace, cfg);
  return trace;
}

TraceDiagnostics check_trace(const Problem& ps, const IterateTrace& trace, const SolverConfig& cfg) {
  TraceDiagnostics d;
  double C = 0.0;
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    d.spd = d.spd && r.spd_ok;
    d.max_secant_residual = std::max(d.max_secant_residual, r.secant_residual);
    d.max_u_norm = std::max(d.max_u_norm, r.u_norm);
    C = std::max(C, r.jacobian_norm);
    rho = std::min(rho, r.min_eigenvalue);
    if (!(r.t > 0.0) || k + 1 >= trace.records.size()) continue;

    const auto& next = trace.records[k + 1];
    if (!(r.phi < 0.0)) d.descent_recursion = false;
    if (next.varsigma > r.varsigma + cfg.beta * r.t * r.phi + 1e-10) d.descent_recursion = false;

    try {
      const std::vector<Vector> now = eval_F(ps, r.x);
      const std::vector<Vector> after = eval_F(ps, next.x);
      for (int i : r.a.indices) {
        const Vector model = now[i] + cfg.beta * r.t * (ps.jacobian(i, r.x) * r.u);
        if (!leq(ps.cone, after[i], model, cfg.armijo_slack)) d.armijo = false;
        const bool covered = std::any_of(after.begin(), after.end(), [&](const Vector& v) {
          return leq(ps.cone, v, model, cfg.armijo_slack);
        });
        if (!covered) d.set_descent = false;
      }
    } catch (const Error&) {
      d.armijo = false;
      d.set_descent = false;
    }
  }
  if (!d.descent_recursion) d.warnings.push_back("descent recursion violated");
  if (!d.armijo) d.warnings.push_back("Armijo post-check failed");
  if (!d.set_descent) d.warnings.push_back("set descent check failed");
  if (!d.spd) d.warnings.push_back("BFGS matrix not positive definite");
  if (rho > 0.0 && std::isfinite(rho)) {
    d.u_bound = 2.0 * C * ps.cone.lipschitz() / rho;
    d.bounded = d.max_u_norm <= d.u_bound;
  } else {
    d.bounded = false;
  }
  if (!d.bounded) d.warnings.push_back("direction norms exceed 2 C L / rho");
  return d;
}

StationarityReport stationarity_report(const Problem& ps, const Vector& x, const HessianStore& store,
                                       const SolverConfig& cfg) {
  const auto sc = scalarize(ps);
  SubproblemOptions options;
  options.inner.tol = cfg.tol_sub;
  options.max_partitions = cfg.max_partitions;

  auto structure = [&](const Vector& at) {
    return analyze_minimal(ps.cone, eval_F(ps, at), cfg.tol_group, cfg.tol_order);
  };
  const MinimalStructure ms = structure(x);
  const auto gradients = scalarized_gradients(sc, eval_jacobians(ps, x));
  const SubproblemSolution sub = solve_subproblem(store, gradients, ms, options);

  StationarityReport report;
  report.phi = sub.phi;
  report.u = sub.u;
  report.u_norm = sub.u.norm();
  report.min_equals_wmin = ms.minimal == ms.weakly_minimal;

  constexpr double radius = 1e-4;
  for (int k = 0; k < 8; ++k) {
    Vector d(ps.n);
    for (int j = 0; j < ps.n; ++j) {
      d(j) = std::cos(2.0 * std::numbers::pi * (k + 0.5) / 8.0 + j * std::numbers::pi / 2.0);
    }
    const Vector probe = x + radius * d.normalized();
    try {
      if (structure(probe).w() != ms.w()) report.w_locally_constant = false;
    } catch (const Error&) {
      report.w_locally_constant = false;
    }
  }
  return report;
}

RateProbe rate_probe(const IterateTrace& trace, int window) {
  RateProbe probe;
  const int last = static_cast<int>(trace.records.size()) - 1;
  if (last < 1) return probe;
  const Vector& xs = trace.x_final();
  const int first = std::max(0, last - window);
  for (int k = first; k < last; ++k) {
    const double d0 = (trace.records[k].x - xs).norm();
    if (d0 == 0.0) break;
    probe.ratios.push_back((trace.records[k + 1].x - xs).norm() / d0);
  }
  for (std::size_t j = 1; j < probe.ratios.size(); ++j) {
    if (probe.ratios[j] > probe.ratios[j - 1] + 1e-12) probe.ratios_nonincreasing = false;
  }
  for (int k = last; k >= 0; --k) {
    if (trace.records[k].t > 0.0) {
      probe.unit_last_step = trace.records[k].t == 1.0;
      break;
    }
  }
  return probe;
}

}  // namespace setopt
