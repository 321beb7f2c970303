#include "setopt/oracle.hpp"
#include "setopt/solver.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace setopt;
using setopt::testing::vec;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidConfig;
}

}  // namespace

TEST_CASE("grid spec") {
  const GridSpec g = GridSpec::uniform(vec({0, -1}), vec({1, 1}), 0.5);
  CHECK(g.points_along(0) == 3);
  CHECK(g.points_along(1) == 5);
  CHECK(g.count() == 15);
  CHECK(g.point(0) == vec({0, -1}));
  CHECK(g.point(14) == vec({1, 1}));
  CHECK(code_of([] { GridSpec::uniform(vec({0, 0}), vec({1, 1}), 1e-4).validate(); }) == ErrorCode::GridTooLarge);
  CHECK(code_of([] { GridSpec::uniform(vec({1}), vec({0}), 0.1).validate(); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("gerstewitz bisection") {
  const Cone r2 = Cone::orthant(2);
  CHECK(std::abs(gerstewitz_bisect(r2, vec({3, -1})) - 3.0) <= 1e-12);
  CHECK(std::abs(gerstewitz_bisect(r2, vec({0, 0}))) <= 1e-12);
  CHECK(std::abs(gerstewitz_bisect(r2, -r2.e()) + 1.0) <= 1e-12);
}

TEST_CASE("brute filters") {
  const Cone r2 = Cone::orthant(2);
  CHECK(brute_min(r2, {vec({1, 2}), vec({2, 1}), vec({3, 3})}) == std::vector<int>{0, 1});
  CHECK(brute_wmin(r2, {vec({1, 2}), vec({1, 3})}) == std::vector<int>{0, 1});
  CHECK(brute_min(r2, {vec({1, 1}), vec({1, 1})}) == std::vector<int>{0, 1});
  CHECK(code_of([&] { brute_min(r2, {}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("grid min-max") {
  const std::vector<QuadraticTerm> one{{vec({2}), Matrix::Identity(1, 1)}};
  const auto r = grid_minmax(one, GridSpec::uniform(vec({-10}), vec({10}), 1e-3));
  CHECK(std::abs(r.u(0) + 2.0) <= 2e-3);
  CHECK(std::abs(r.phi + 2.0) <= 1e-4);
  CHECK(code_of([] { grid_minmax({}, GridSpec::uniform(vec({-1}), vec({1}), 0.1)); }) == ErrorCode::EmptyInput);
}

TEST_CASE("weak minimality certifier") {
  const Problem sq = parse_problem("[meta] name=sq n=1 m=1 p=1\n[box]\n-2 2\n[functions]\nx1^2\n");
  const auto violated = certify_weak_minimality(sq, vec({1}), GridSpec::uniform(vec({-2}), vec({2}), 1e-3));
  CHECK(violated.verdict == Verdict::Violated);
  REQUIRE(violated.witness.has_value());
  CHECK(std::abs((*violated.witness)(0)) < 1.0);

  const auto excluded = certify_weak_minimality(sq, vec({1}), GridSpec::uniform(vec({1.5}), vec({2}), 1e-3));
  CHECK(excluded.verdict == Verdict::NoneFoundAtResolution);

  const Problem e5 = builtin("ex5");
  const IterateTrace tr = run(e5, vec({4.0}));
  REQUIRE(tr.status == Status::Converged);
  const auto cert =
      certify_weak_minimality(e5, tr.x_final(), GridSpec::uniform(vec({2.335}), vec({4.401}), 1e-3));
  CHECK(cert.verdict == Verdict::NoneFoundAtResolution);
  CHECK(cert.scanned > 2000);
}

TEST_CASE("finite difference Jacobian") {
  const Problem ps = builtin("ex3");
  const Vector x = vec({0.7, -1.3});
  const Matrix fd = finite_difference_jacobian(ps, 3, x);
  CHECK((fd - ps.jacobian(3, x)).cwiseAbs().maxCoeff() <= 1e-7);
}
