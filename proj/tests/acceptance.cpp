// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "setopt/bench.hpp"
#include "setopt/cli.hpp"
#include "setopt/direction.hpp"
#include "setopt/oracle.hpp"
#include "setopt/setorder.hpp"
#include "setopt/solver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace setopt;
namespace fs = std::filesystem;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index k = 0;
  for (double x : values) v(k++) = x;
  return v;
}

Vector random_vector(std::mt19937_64& gen, Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector v(n);
  for (Index k = 0; k < n; ++k) v(k) = dist(gen);
  return v;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::vector<Vector> starts_for(const Problem& ps, int count, std::uint64_t seed) {
  std::vector<Vector> xs;
  for (int k = 0; k < count; ++k) xs.push_back(sample_start(ps.box, seed, static_cast<std::uint64_t>(k)));
  return xs;
}

const std::vector<std::string> kAll{"ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7"};

/// Solves every built-in from a handful of seeded starts; shared by several criteria.
const std::vector<std::pair<Problem, IterateTrace>>& corpus() {
  static const auto runs = [] {
    std::vector<std::pair<Problem, IterateTrace>> out;
    for (const auto& name : kAll) {
      const Problem ps = builtin(name);
      for (const Vector& x0 : starts_for(ps, 5, 11)) out.emplace_back(ps, run(ps, x0));
    }
    return out;
  }();
  return runs;
}

Outcome ac1() {
  Outcome o;
  auto close = [&](const Vector& got, std::initializer_list<double> want, const std::string& label) {
    if ((got - vec(want)).cwiseAbs().maxCoeff() > 5e-4) o.fail(label);
  };
  const auto F1 = eval_F(builtin("ex1"), vec({2.3}));
  close(F1[9], {23.8454, -0.0901}, "ex1 f^10");
  close(F1[24], {23.0660, -1.5080}, "ex1 f^25");
  close(F1[49], {22.8153, 0.4762}, "ex1 f^50");
  const auto F5 = eval_F(builtin("ex5"), vec({4.0}));
  close(F5[0], {85.5982, -0.7345}, "ex5 f^1");
  close(F5[1], {86.0982, -1.0209}, "ex5 f^2");
  close(F5[2], {86.5982, -1.3073}, "ex5 f^3");
  close(F5[3], {87.0982, -1.5937}, "ex5 f^4");
  return o;
}

Outcome ac2() {
  Outcome o;
  const std::vector<std::pair<std::string, Cone>> cones{
      {"R2+", Cone::orthant(2)},
      {"R3+", Cone::orthant(3)},
      {"ex5", builtin("ex5").cone},
      {"ex6", builtin("ex6").cone}};
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> pos(0.01, 10.0);
  for (const auto& [label, c] : cones) {
    const double L = c.lipschitz();
    const Index m = c.dim();
    for (int k = 0; k < 10000; ++k) {
      const Vector y = random_vector(gen, m, 5.0);
      const Vector z = random_vector(gen, m, 5.0);
      const double gy = gerstewitz(c, y);
      const double gz = gerstewitz(c, z);
      const double scale = 1.0 + std::abs(gy) + std::abs(gz);
      if (gerstewitz(c, Vector(y + z)) > gy + gz + 1e-12 * scale) o.fail(label + " sublinearity");
      const double lam = pos(gen);
      if (std::abs(gerstewitz(c, Vector(lam * y)) - lam * gy) > 1e-12 * (1.0 + std::abs(lam * gy)))
        o.fail(label + " homogeneity");
      if (std::abs(gy - gz) > L * (y - z).norm() * (1.0 + 1e-12)) o.fail(label + " lipschitz");
      // y + s e with s > 0 lies strictly above y.
      const Vector up = y + pos(gen) * c.e();
      if (leq(c, y, up) && gerstewitz(c, y) > gerstewitz(c, up) + 1e-12) o.fail(label + " monotone");
      if (lt(c, y, up) && !(gerstewitz(c, y) < gerstewitz(c, up))) o.fail(label + " strict monotone");
      if (leq(c, y, z) && gy > gz + 1e-12) o.fail(label + " monotone");
      if (in_cone(c, Vector(-y)) != (gy <= 0.0)) o.fail(label + " representability");
      if (in_int_cone(c, Vector(-y)) != (gy < 0.0)) o.fail(label + " strict representability");
      const double t = random_vector(gen, 1, 5.0)(0);
      if (std::abs(gerstewitz(c, Vector(y + t * c.e())) - (gy + t)) > 1e-12 * (1.0 + std::abs(gy) + std::abs(t)))
        o.fail(label + " translativity");
      if (std::abs(gy - gerstewitz_bisect(c, y)) > 1e-10) o.fail(label + " bisection");
    }
  }
  return o;
}

Outcome ac3() {
  Outcome o;
  const std::vector<Cone> cones{Cone::orthant(2), Cone::orthant(3), builtin("ex5").cone, builtin("ex6").cone};
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> size(1, 200);
  std::uniform_int_distribution<int> coin(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    const Cone& c = cones[static_cast<std::size_t>(trial) % cones.size()];
    const int p = size(gen);
    std::vector<Vector> values;
    for (int i = 0; i < p; ++i) {
      if (i > 0 && coin(gen) == 0) {
        values.push_back(values[std::uniform_int_distribution<int>(0, i - 1)(gen)]);
        continue;
      }
      Vector v = random_vector(gen, c.dim(), 2.0);
      if (coin(gen) == 1) v = v.array().round() / 2.0;
      values.push_back(v);
    }
    if (minimal_elements(c, values) != brute_min(c, values)) o.fail("Min mismatch, trial " + std::to_string(trial));
    if (weakly_minimal_elements(c, values) != brute_wmin(c, values))
      o.fail("WMin mismatch, trial " + std::to_string(trial));
  }
  return o;
}

Outcome ac4() {
  Outcome o;
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 2;
    const int T = 1 + static_cast<int>(gen() % 6);
    const int p = T;
    HessianStore store = init_store(n, p, 1);
    std::vector<Matrix> grads;
    PartitionElement a;
    for (int i = 0; i < p; ++i) {
      const Matrix R = Matrix::Random(n, n);
      store.B[static_cast<std::size_t>(i)] = R * R.transpose() + 0.2 * Matrix::Identity(n, n);
      grads.push_back(random_vector(gen, n, 3.0));
      a.indices.push_back(i);
    }
    const MinMaxSolution s = solve_for_a(store, grads, a);
    const auto terms = collect_terms(store, grads, a);
    double radius = 0.0;
    double lo_eig = std::numeric_limits<double>::infinity();
    for (const auto& t : terms) {
      radius = std::max(radius, t.g.norm());
      lo_eig = std::min(lo_eig, Eigen::SelfAdjointEigenSolver<Matrix>(t.H).eigenvalues().minCoeff());
    }
    radius = 1.0 + radius / lo_eig;
    const double step = n == 1 ? 1e-3 : std::max(1e-3, 2.0 * radius / 800.0);
    const GridMinMax ref = grid_minmax(terms, GridSpec::around(Vector::Zero(n), radius, step));
    const std::string id = "trial " + std::to_string(trial);
    if (std::abs(s.phi - ref.phi) > 1e-4) o.fail(id + " phi");
    if ((s.u - ref.u).lpNorm<Eigen::Infinity>() > 1e-4) o.fail(id + " u");
    if (s.converged && (s.gap < 0.0 || s.gap > 1e-10 * std::max(1.0, std::abs(s.phi)))) o.fail(id + " gap");
    if (!s.converged) o.fail(id + " not converged");
  }
  return o;
}

Outcome ac5() {
  Outcome o;
  for (const auto& [ps, tr] : corpus()) {
    if (tr.method != Method::QuasiNewton) continue;
    for (const auto& r : tr.records) {
      if (!r.spd_ok) o.fail(ps.name + " SPD at k=" + std::to_string(r.k));
      if (r.secant_residual > 1e-10) o.fail(ps.name + " secant at k=" + std::to_string(r.k));
    }
    if (!tr.diagnostics.spd) o.fail(ps.name + " SPD diagnostic");
  }
  return o;
}

Outcome ac6() {
  Outcome o;
  const double beta = SolverConfig{}.beta;
  for (const auto& [ps, tr] : corpus()) {
    if (tr.status != Status::Converged) continue;
    for (std::size_t k = 0; k + 1 < tr.records.size(); ++k) {
      const auto& r = tr.records[k];
      if (!(r.phi < 0.0)) o.fail(ps.name + " phi >= 0 at k=" + std::to_string(k));
      if (tr.records[k + 1].varsigma > r.varsigma + beta * r.t * r.phi + 1e-10)
        o.fail(ps.name + " recursion at k=" + std::to_string(k));
    }
  }
  return o;
}

Outcome ac7() {
  Outcome o;
  for (const char* name : {"ex1", "ex3", "ex4", "ex5"}) {
    const Problem ps = builtin(name);
    int converged = 0;
    for (const Vector& x0 : starts_for(ps, 20, 7)) {
      const IterateTrace tr = run(ps, x0);
      if (tr.status == Status::Converged) ++converged;
      if (ps.name == "ex5" && (tr.x_final()(0) < 2.335 || tr.x_final()(0) > 4.401))
        o.fail("ex5 terminal point outside [2.335, 4.401]");
    }
    if (converged < 18) o.fail(std::string(name) + " converged " + std::to_string(converged) + "/20");
  }
  return o;
}

Outcome ac8() {
  Outcome o;
  std::ostringstream medians;
  for (const char* name : {"ex1", "ex2", "ex3", "ex4"}) {
    const Problem ps = builtin(name);
    BenchConfig cfg;
    cfg.starts = 20;
    cfg.seed = 7;
    cfg.jobs = 4;
    const BenchStats stats = summarize(ps, cfg, run_bench(ps, cfg));
    double qnm = 0.0, sd = 0.0;
    for (const auto& m : stats.methods) {
      if (!m.iterations) {
        o.fail(std::string(name) + " no converged runs");
        continue;
      }
      (m.method == Method::QuasiNewton ? qnm : sd) = m.iterations->median;
    }
    medians << ' ' << name << '=' << qnm << '/' << sd;
    if (qnm > sd) o.fail(std::string(name) + " median qnm > sd");
  }
  if (o.pass) o.detail = "medians qnm/sd:" + medians.str();
  return o;
}

Outcome ac9() {
  Outcome o;
  for (const auto& [ps, tr] : corpus()) {
    if (tr.status != Status::Converged) continue;
    const double bound = 1e-3 * (1.0 + ps.cone.lipschitz());
    if (std::abs(tr.records.back().phi) > bound) o.fail(ps.name + " |phi| above bound");
  }
  const Problem e1 = builtin("ex1");
  for (const Vector& x0 : starts_for(e1, 3, 11)) {
    const IterateTrace tr = run(e1, x0);
    if (tr.status != Status::Converged) continue;
    const auto cert = certify_weak_minimality(e1, tr.x_final(), GridSpec::around(tr.x_final(), 0.25, 1e-3));
    if (cert.verdict != Verdict::NoneFoundAtResolution) o.fail("ex1 certifier found a witness");
  }
  const Problem e5 = builtin("ex5");
  for (const Vector& x0 : starts_for(e5, 3, 11)) {
    const IterateTrace tr = run(e5, x0);
    if (tr.status != Status::Converged) continue;
    const auto cert = certify_weak_minimality(e5, tr.x_final(), GridSpec::uniform(e5.box.lo, e5.box.hi, 1e-3));
    if (cert.verdict != Verdict::NoneFoundAtResolution) o.fail("ex5 certifier found a witness");
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ac10(const fs::path& scratch) {
  Outcome o;
  auto bench = [&](const std::string& sub, const std::string& jobs) {
    const fs::path dir = scratch / sub;
    fs::remove_all(dir);
    const std::vector<std::string> args{"setopt", "bench", "--problem", "ex3", "--seed", "7",
                                        "--jobs", jobs, "--out", dir.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    if (run_cli(static_cast<int>(argv.size()), argv.data(), out, err) != 0) o.fail("bench failed: " + err.str());
    return slurp(dir / "ex3_bench_stats.json");
  };
  const std::string a = bench("jobs1", "1");
  const std::string b = bench("jobs1_again", "1");
  const std::string c = bench("jobs8", "8");
  if (a.empty()) o.fail("empty stats JSON");
  if (a != b) o.fail("repeated --jobs 1 differs");
  if (a != c) o.fail("--jobs 8 differs from --jobs 1");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "setopt_acceptance";
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 function fidelity", ac1},
      {"AC2 Gerstewitz properties", ac2},
      {"AC3 dominance oracle", ac3},
      {"AC4 subproblem oracle", ac4},
      {"AC5 BFGS integrity", ac5},
      {"AC6 descent recursion", ac6},
      {"AC7 convergence", ac7},
      {"AC8 QNM vs SD", ac8},
      {"AC9 stationarity certification", ac9},
      {"AC10 determinism", [&] { return ac10(scratch); }}};

  int failed = 0;
  for (const auto& [label, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << label << " (" << std::fixed << std::setprecision(2) << secs << " s)";
    if (!o.detail.empty()) std::cout << ": " << o.detail;
    std::cout << '\n';
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
