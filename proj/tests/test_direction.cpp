#include "setopt/direction.hpp"
#include "setopt/oracle.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace setopt;
using setopt::testing::vec;

namespace {

QuadraticTerm term(Vector g, Matrix H) { return {std::move(g), std::move(H)}; }

Matrix random_spd(std::mt19937_64& gen, Index n) {
  const Matrix R = Matrix::Random(n, n);
  Matrix H = R * R.transpose() + 0.2 * Matrix::Identity(n, n);
  // Vary scale a little per instance.
  H *= 0.5 + std::uniform_real_distribution<double>(0.0, 1.5)(gen);
  return H;
}

GridMinMax grid_reference(std::span<const QuadraticTerm> terms) {
  const Index n = terms.front().g.size();
  double radius = 0.0;
  double lo_eig = std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    radius = std::max(radius, t.g.norm());
    lo_eig = std::min(lo_eig, Eigen::SelfAdjointEigenSolver<Matrix>(t.H).eigenvalues().minCoeff());
  }
  radius = 1.0 + radius / lo_eig;
  const double step = n == 1 ? 1e-3 : std::max(1e-3, 2.0 * radius / 800.0);
  return grid_minmax(terms, GridSpec::around(Vector::Zero(n), radius, step));
}

}  // namespace

TEST_CASE("store initialization") {
  const HessianStore store = init_store(2, 3, 2);
  REQUIRE(store.B.size() == 6);
  for (const auto& B : store.B) CHECK(B == Matrix::Identity(2, 2));
  CHECK(store_is_spd(store));
  CHECK(store_min_eigenvalue(store) == 1.0);
  for (int c : store.updates) CHECK(c == 0);
  for (int c : store.skips) CHECK(c == 0);
}

TEST_CASE("BFGS update") {
  HessianStore store = init_store(2, 1, 1);
  bfgs_update(store, vec({1, 0}), {vec({1, 0})});
  CHECK(store.B[0] == Matrix::Identity(2, 2));

  store = init_store(2, 1, 1);
  const auto report = bfgs_update(store, vec({1, 0}), {vec({2, 0})});
  CHECK(report.applied == 1);
  CHECK(store.B[0].isApprox(Vector(vec({2, 1})).asDiagonal().toDenseMatrix()));
  CHECK(report.max_secant_residual <= 1e-15);

  store = init_store(2, 1, 1);
  const auto skip = bfgs_update(store, vec({1, 0}), {vec({-1, 0})});
  CHECK(skip.skipped == 1);
  CHECK(skip.skipped_pairs == std::vector<int>{0});
  CHECK(store.B[0] == Matrix::Identity(2, 2));
  CHECK(store.skips[0] == 1);
}

TEST_CASE("BFGS keeps matrices SPD and satisfies the secant equation") {
  std::mt19937_64 gen(2);
  // Gradient differences of smooth functions: y = M s with M drifting around an SPD matrix.
  HessianStore store = init_store(2, 4, 2);
  std::vector<Matrix> curvature;
  for (int k = 0; k < 8; ++k) curvature.push_back(random_spd(gen, 2));
  for (int step = 0; step < 200; ++step) {
    const Vector s = setopt::testing::random_vector(gen, 2);
    std::vector<Vector> y;
    for (int k = 0; k < 8; ++k) {
      y.push_back(curvature[static_cast<std::size_t>(k)] * s + 0.3 * s.norm() * setopt::testing::random_vector(gen, 2));
    }
    const auto report = bfgs_update(store, s, y);
    CHECK(report.max_secant_residual <= 1e-10);
    REQUIRE(store_is_spd(store));
  }

  // Arbitrary y: many pairs are skipped, the rest stay SPD.
  HessianStore wild = init_store(3, 2, 1);
  for (int step = 0; step < 30; ++step) {
    const Vector s = setopt::testing::random_vector(gen, 3);
    const auto report = bfgs_update(wild, s, {setopt::testing::random_vector(gen, 3), setopt::testing::random_vector(gen, 3)});
    CHECK(report.max_secant_residual <= 1e-10);
    REQUIRE(store_is_spd(wild));
  }
}

TEST_CASE("single term") {
  const std::vector<QuadraticTerm> terms{term(vec({2}), Matrix::Identity(1, 1))};
  const auto s = solve_minmax(terms);
  CHECK(s.u(0) == doctest::Approx(-2.0));
  CHECK(s.phi == doctest::Approx(-2.0));
  CHECK(s.lambda == vec({1}));
  CHECK(s.gap <= 1e-12);
  const auto ref = grid_minmax(terms, GridSpec::uniform(vec({-10}), vec({10}), 1e-3));
  CHECK(std::abs(ref.u(0) + 2.0) <= 2e-3);
  CHECK(std::abs(ref.phi + 2.0) <= 1e-4);
}

TEST_CASE("two opposing terms: oracle optimum") {
  const std::vector<QuadraticTerm> terms{term(vec({3}), Matrix::Identity(1, 1)),
                                         term(vec({-1}), Matrix::Identity(1, 1))};
  const auto s = solve_minmax(terms);
  const auto ref = grid_minmax(terms, GridSpec::uniform(vec({-10}), vec({10}), 1e-4));
  CHECK(std::abs(s.u(0) - ref.u(0)) <= 1e-4);
  CHECK(std::abs(s.phi - ref.phi) <= 1e-4);
  CHECK(s.u(0) == 0.0);
  CHECK(s.phi == 0.0);
  CHECK(s.gap <= 1e-10);
}

TEST_CASE("stationary input") {
  const std::vector<QuadraticTerm> terms{term(vec({0, 0}), Matrix::Identity(2, 2)),
                                         term(vec({0, 0}), 2 * Matrix::Identity(2, 2))};
  const auto s = solve_minmax(terms);
  CHECK(s.u.norm() == 0.0);
  CHECK(s.phi == 0.0);
}

TEST_CASE("random instances match grid search") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 1 + trial % 2;
    const int T = 1 + static_cast<int>(gen() % 6);
    std::vector<QuadraticTerm> terms;
    for (int t = 0; t < T; ++t) terms.push_back(term(setopt::testing::random_vector(gen, n, 3.0), random_spd(gen, n)));
    const auto s = solve_minmax(terms);
    CHECK(s.converged);
    CHECK(s.phi <= 0.0);
    CHECK(s.gap >= 0.0);
    CHECK(s.gap <= 1e-10 * std::max(1.0, std::abs(s.phi)));
    const auto ref = grid_reference(terms);
    CHECK(std::abs(s.phi - ref.phi) <= 1e-4);
    CHECK((s.u - ref.u).lpNorm<Eigen::Infinity>() <= 1e-4);

    // Scale coherence.
    std::vector<QuadraticTerm> scaled = terms;
    for (auto& t : scaled) {
      t.g *= 3.0;
      t.H *= 3.0;
    }
    const auto s3 = solve_minmax(scaled);
    CHECK(std::abs(s3.phi - 3.0 * s.phi) <= 1e-10 * (1.0 + std::abs(s3.phi)));
    CHECK((s3.u - s.u).norm() <= 1e-8 * (1.0 + s.u.norm()));
  }
}

TEST_CASE("subproblem over partitions") {
  const HessianStore store = init_store(1, 3, 1);
  std::vector<Matrix> grads{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 4.0),
                            Matrix::Constant(1, 1, 2.0)};
  MinimalStructure single;
  single.classes = {{{0}, vec({0})}};
  const auto s1 = solve_subproblem(store, grads, single);
  const auto d1 = solve_for_a(store, grads, PartitionElement{{0}});
  CHECK(s1.phi == d1.phi);
  CHECK(s1.u == d1.u);

  // Two selectors from one class: phi(a) = -g^2/2, minimum at g = 4.
  MinimalStructure two;
  two.classes = {{{0, 1}, vec({0})}};
  const auto s2 = solve_subproblem(store, grads, two);
  CHECK(s2.a.indices == std::vector<int>{1});
  CHECK(s2.phi == doctest::Approx(std::min(-0.5, -8.0)));
  CHECK(s2.evaluated == 2);

  // Identical functions tie; the first selector wins.
  std::vector<Matrix> same(3, Matrix::Constant(1, 1, 2.0));
  MinimalStructure three;
  three.classes = {{{0, 1, 2}, vec({0})}};
  CHECK(solve_subproblem(store, same, three).a.indices == std::vector<int>{0});
}
