#include "setopt/solver.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace setopt;
using setopt::testing::vec;

namespace {

Problem square() { return parse_problem("[meta] name=sq n=1 m=1 p=1\n[box]\n-5 5\n[functions]\nx1^2\n"); }

/// Scalar brute force of the same Armijo rule, f(x) = x^2.
std::pair<double, int> scalar_armijo(double x, double u, double beta, double nu) {
  double t = 1.0;
  for (int q = 0; q < 60; ++q, t *= nu) {
    if ((x + t * u) * (x + t * u) <= x * x + beta * t * 2 * x * u) return {t, q};
  }
  return {0.0, -1};
}

}  // namespace

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.beta = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("(0,1)"), Error);
  cfg = {};
  cfg.nu = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.eps_stop = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(parse_method("qnm") == Method::QuasiNewton);
  CHECK(parse_method("sd") == Method::SteepestDescent);
}

TEST_CASE("Armijo backtracking on x^2") {
  const Problem ps = square();
  const auto [t_ref, q_ref] = scalar_armijo(1.0, -2.0, 0.5, 0.6);
  const auto r = armijo_backtrack(ps, vec({1}), PartitionElement{{0}}, vec({-2}), eval_F(ps, vec({1})),
                                  eval_jacobians(ps, vec({1})), SolverConfig{});
  CHECK(r.q == q_ref);
  CHECK(r.t == doctest::Approx(t_ref));
  CHECK(r.q == 2);
  CHECK(r.t == doctest::Approx(0.36));
}

TEST_CASE("Armijo on a linear function accepts t = 1") {
  const Problem ps = parse_problem("[meta] name=lin n=1 m=1 p=1\n[box]\n-5 5\n[functions]\n3*x1\n");
  const auto r = armijo_backtrack(ps, vec({0.5}), PartitionElement{{0}}, vec({-3}), eval_F(ps, vec({0.5})),
                                  eval_jacobians(ps, vec({0.5})), SolverConfig{});
  CHECK(r.q == 0);
  CHECK(r.t == 1.0);
}

TEST_CASE("Armijo reports the failing index") {
  const Problem ps = square();
  int j = -1;
  SolverConfig cfg;
  cfg.max_backtracks = 3;
  // Ascent direction: no step can satisfy the condition.
  CHECK_THROWS_AS(armijo_backtrack(ps, vec({1}), PartitionElement{{0}}, vec({2}), eval_F(ps, vec({1})),
                                   eval_jacobians(ps, vec({1})), cfg, &j),
                  Error);
  CHECK(j == 0);
}

TEST_CASE("single scalar function reduces to BFGS") {
  const IterateTrace tr = run(square(), vec({5}));
  CHECK(tr.status == Status::Converged);
  CHECK(std::abs(tr.x_final()(0)) <= 1e-2);
  CHECK(tr.records.back().u_norm < 1e-3);
}

TEST_CASE("ex1 from 2.3") {
  const IterateTrace tr = run(builtin("ex1"), vec({2.3}));
  CHECK(tr.status == Status::Converged);
  CHECK(tr.iterations() <= 100);
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    CHECK(tr.records[k].x(0) >= 1.5);
    CHECK(tr.records[k].x(0) <= 2.5);
    if (k + 1 < tr.records.size()) CHECK(tr.records[k + 1].varsigma < tr.records[k].varsigma);
  }
  const auto& d = tr.diagnostics;
  CHECK(d.descent_recursion);
  CHECK(d.armijo);
  CHECK(d.set_descent);
  CHECK(d.spd);
  CHECK(d.bounded);
  CHECK(d.max_secant_residual <= 1e-10);
}

TEST_CASE("ex5 from 4.0") {
  const IterateTrace tr = run(builtin("ex5"), vec({4.0}));
  CHECK(tr.status == Status::Converged);
  CHECK(tr.x_final()(0) >= 2.335);
  CHECK(tr.x_final()(0) <= 4.401);
  for (std::size_t k = 0; k + 1 < tr.records.size(); ++k) {
    CHECK(tr.records[k + 1].varsigma <= tr.records[k].varsigma);
  }
}

TEST_CASE("steepest descent keeps identity matrices") {
  SolverConfig cfg;
  cfg.method = Method::SteepestDescent;
  const IterateTrace tr = run(builtin("ex3"), vec({1.0, 2.0}), cfg);
  CHECK(tr.status == Status::Converged);
  for (const auto& r : tr.records) CHECK(r.min_eigenvalue == 1.0);
}

TEST_CASE("max iterations status and count") {
  SolverConfig cfg;
  cfg.max_iter = 2;
  cfg.method = Method::SteepestDescent;
  const IterateTrace tr = run(builtin("ex4"), vec({1.0, -2.0}), cfg);
  CHECK(tr.status == Status::MaxIterations);
  CHECK(tr.iterations() == 2);
  CHECK(tr.records.back().t == 0.0);
}

TEST_CASE("determinism") {
  const IterateTrace a = run(builtin("ex6"), vec({1.0, 1.0}));
  const IterateTrace b = run(builtin("ex6"), vec({1.0, 1.0}));
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].x == b.records[k].x);
    CHECK(a.records[k].phi == b.records[k].phi);
    CHECK(a.records[k].u == b.records[k].u);
    CHECK(a.records[k].t == b.records[k].t);
  }
}

TEST_CASE("image snapshots are size gated") {
  CHECK(run(builtin("ex1"), vec({2.3})).records.front().images.size() == 50);
  const Problem big = parse_problem(
      "[meta] name=big n=1 m=3 p=200\n[box]\n-1 1\n[functions]\n(x1-i/200)^2\nx1^2+i\n(x1+1)^2\n");
  CHECK(run(big, vec({0.5})).records.front().images.empty());
  SolverConfig cfg;
  cfg.trace_images = true;
  CHECK(run(big, vec({0.5}), cfg).records.front().images.size() == 200);
}

TEST_CASE("stationarity report") {
  const Problem sq = square();
  const HessianStore store = init_store(1, 1, 1);
  const auto at_zero = stationarity_report(sq, vec({0}), store);
  CHECK(at_zero.phi == 0.0);
  CHECK(at_zero.u_norm == 0.0);
  CHECK(at_zero.regular());

  // Both gradients positive: u = -1 decreases every component.
  const Problem up = parse_problem("[meta] name=up n=1 m=2 p=1\n[box]\n-5 5\n[functions]\nx1\n2*x1\n");
  const auto rep = stationarity_report(up, vec({0.3}), init_store(1, 1, 2));
  CHECK(rep.phi < 0.0);
  CHECK(rep.u(0) < 0.0);

  const IterateTrace tr = run(builtin("ex3"), vec({1.0, 2.0}));
  REQUIRE(tr.status == Status::Converged);
  const auto fin = stationarity_report(builtin("ex3"), tr.x_final(), init_store(2, 25, 2));
  CHECK(std::abs(fin.phi) <= 1e-3);
}

TEST_CASE("rate probe on strongly convex problems") {
  for (const char* name : {"ex3", "ex4"}) {
    const IterateTrace tr = run(builtin(name), name == std::string("ex3") ? vec({1.0, 2.0}) : vec({1.0, -2.0}));
    REQUIRE(tr.status == Status::Converged);
    const RateProbe probe = rate_probe(tr);
    CHECK(!probe.ratios.empty());
    // Soft diagnostic: report, do not fail.
    if (!probe.ratios_nonincreasing || !probe.unit_last_step) {
      MESSAGE(name << ": rate probe not monotone or last step below 1 (soft warning)");
    }
  }
}

TEST_CASE("module errors become a failure status") {
  const Problem lg = parse_problem("[meta] name=lg n=1 m=1 p=1\n[box]\n0.5 5\n[functions]\nlog(x1) + x1^2\n");
  const IterateTrace tr = run(lg, vec({-1.0}));
  CHECK(tr.status == Status::NumericalError);
  CHECK(tr.message.find("DomainError") != std::string::npos);
  CHECK(tr.records.size() == 1);
}
