#include "setopt/cli.hpp"

#include "setopt/bench.hpp"
#include "setopt/oracle.hpp"
#include "setopt/problem.hpp"
#include "setopt/setorder.hpp"
#include "setopt/solver.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace setopt {

namespace {

namespace fs = std::filesystem;

/// Thrown for usage problems that CLI11 cannot see (bad values, unknown problems).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFlags {
  std::string problem;
  std::string x0;
  std::string method = "qnm";
  SolverConfig cfg;
  std::string out;

  void add(CLI::App& app, bool with_method) {
    app.add_option("--problem", problem, "built-in name (ex1..ex7) or problem file")->required();
    app.add_option("--beta", cfg.beta, "Armijo slope fraction in (0,1)");
    app.add_option("--nu", cfg.nu, "backtracking ratio in (0,1)");
    app.add_option("--eps", cfg.eps_stop, "stop when |u| < eps");
    app.add_option("--max-iter", cfg.max_iter, "iteration cap");
    app.add_option("--seed", cfg.seed, "seed for the start point when --x0 is omitted");
    app.add_option("--out", out, "output directory (default $SETOPT_OUT_DIR or .)");
    if (with_method) {
      app.add_option("--x0", x0, "start point, comma separated");
      app.add_option("--method", method, "qnm or sd")->check(CLI::IsMember({"qnm", "sd"}));
    }
  }
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(parse_double(cell));
    } catch (const Error&) {
      throw UsageError(std::string(what) + ": '" + cell + "' is not a number");
    }
  }
  return values;
}

Problem load(const std::string& name) {
  Problem ps = resolve_problem(name);
  validate_problem(ps);
  return ps;
}

Vector start_point(const Problem& ps, const SolverFlags& flags) {
  if (flags.x0.empty()) return sample_start(ps.box, flags.cfg.seed, 0);
  const auto values = parse_list(flags.x0, "--x0");
  if (static_cast<int>(values.size()) != ps.n) {
    throw UsageError("--x0 has " + std::to_string(values.size()) + " entries, problem has n=" +
                     std::to_string(ps.n));
  }
  return Eigen::Map<const Vector>(values.data(), ps.n);
}

fs::path output_dir(const std::string& flag) {
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("SETOPT_OUT_DIR");
    dir = env && *env ? env : ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

template <typename Writer>
void write_file(const fs::path& path, Writer writer) {
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  writer(file);
  if (!file) throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
}

int status_exit(Status status) {
  switch (status) {
    case Status::Converged: return kExitOk;
    case Status::MaxIterations: return kExitMaxIterations;
    default: return kExitFailure;
  }
}

std::string file_stem(const Problem& ps) {
  std::string stem = ps.name.empty() ? "problem" : ps.name;
  for (char& c : stem) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return stem;
}

int cmd_solve(const SolverFlags& flags, bool plot, std::ostream& out) {
  SolverConfig cfg = flags.cfg;
  cfg.method = parse_method(flags.method);
  cfg.validate();
  const Problem ps = load(flags.problem);
  if (plot && ps.m > 3) {
    throw UsageError("plot-data supports m <= 3 (problem " + ps.name + " has m=" + std::to_string(ps.m) + ")");
  }
  const Vector x0 = start_point(ps, flags);
  if (plot) cfg.trace_images = true;
  const fs::path dir = output_dir(flags.out);
  const IterateTrace trace = run(ps, x0, cfg);
  const std::string base = file_stem(ps) + "_" + to_string(cfg.method);

  if (plot) {
    write_file(dir / (base + "_images.csv"), [&](std::ostream& os) { write_images_csv(os, ps, trace); });
    write_file(dir / (base + "_iterates.csv"), [&](std::ostream& os) { write_iterates_csv(os, trace); });
  } else {
    write_file(dir / (base + "_trace.csv"), [&](std::ostream& os) { write_trace_csv(os, trace); });
    write_file(dir / (base + "_summary.json"),
               [&](std::ostream& os) { os << summary_json(ps, trace, cfg).dump(2) << "\n"; });
  }
  const auto& last = trace.records.back();
  out << ps.name << " " << to_string(cfg.method) << ": " << to_string(trace.status) << " after "
      << trace.iterations() << " iterations, |u|=" << format_double(last.u_norm)
      << ", phi=" << format_double(last.phi) << "\n";
  if (!trace.message.empty()) out << "  " << trace.message << "\n";
  for (const auto& w : trace.diagnostics.warnings) out << "  warning: " << w << "\n";
  return status_exit(trace.status);
}

struct BenchFlags {
  SolverFlags solver;
  int starts = 100;
  std::string methods = "qnm,sd";
  std::string box;
  int jobs = 1;
};

SampleBox parse_box(const std::string& text, int n) {
  SampleBox box{Vector(n), Vector(n)};
  std::stringstream ss(text);
  std::string cell;
  int d = 0;
  while (std::getline(ss, cell, ',')) {
    const auto colon = cell.find(':');
    if (colon == std::string::npos || d >= n) throw UsageError("--box expects lo:hi per dimension");
    try {
      box.lo(d) = parse_double(cell.substr(0, colon));
      box.hi(d) = parse_double(cell.substr(colon + 1));
    } catch (const Error&) {
      throw UsageError("--box: '" + cell + "' is not lo:hi");
    }
    if (!(box.lo(d) < box.hi(d))) throw UsageError("--box: lo must be below hi");
    ++d;
  }
  if (d != n) throw UsageError("--box needs " + std::to_string(n) + " ranges");
  return box;
}

int cmd_bench(const BenchFlags& flags, std::ostream& out) {
  flags.solver.cfg.validate();
  BenchConfig cfg;
  cfg.solver = flags.solver.cfg;
  cfg.starts = flags.starts;
  cfg.seed = flags.solver.cfg.seed;
  cfg.jobs = flags.jobs;
  cfg.methods.clear();
  std::stringstream ss(flags.methods);
  std::string name;
  while (std::getline(ss, name, ',')) {
    try {
      cfg.methods.push_back(parse_method(name));
    } catch (const Error& e) {
      throw UsageError(e.message());
    }
  }
  if (cfg.methods.empty()) throw UsageError("--methods is empty");
  if (cfg.starts < 1) throw UsageError("--starts must be at least 1");
  if (cfg.jobs < 1) throw UsageError("--jobs must be at least 1");
  const Problem ps = load(flags.solver.problem);
  if (!flags.box.empty()) cfg.box = parse_box(flags.box, ps.n);
  const fs::path dir = output_dir(flags.solver.out);

  const auto runs = run_bench(ps, cfg);
  const BenchStats stats = summarize(ps, cfg, runs);
  const std::string base = file_stem(ps) + "_bench";
  write_file(dir / (base + "_stats.json"), [&](std::ostream& os) { os << stats_json(stats).dump(2) << "\n"; });
  write_file(dir / (base + "_timing.json"), [&](std::ostream& os) { os << timing_json(stats).dump(2) << "\n"; });
  write_file(dir / (base + "_runs.csv"), [&](std::ostream& os) { write_runs_csv(os, runs); });
  const std::string table = format_table(stats);
  write_file(dir / (base + "_table.txt"), [&](std::ostream& os) { os << table; });
  out << table;
  return kExitOk;
}

struct CheckFlags {
  std::string problem;
  int samples = 50;
  std::uint64_t seed = 0;
  std::vector<std::string> oracles;
  std::string x0;
  double step = 1e-3;
  double radius = 0.0;
};

class CheckReport {
 public:
  explicit CheckReport(std::ostream& out) : out_(out) {}
  void pass(const std::string& name, const std::string& detail) { out_ << "PASS " << name << ": " << detail << "\n"; }
  void fail(const std::string& name, const std::string& detail) {
    out_ << "FAIL " << name << ": " << detail << "\n";
    if (first_failure_.empty()) first_failure_ = name;
  }
  int finish() {
    if (first_failure_.empty()) return kExitOk;
    out_ << "first failing check: " << first_failure_ << "\n";
    return kExitFailure;
  }

 private:
  std::ostream& out_;
  std::string first_failure_;
};

std::vector<Vector> sample_points(const Problem& ps, const CheckFlags& flags) {
  std::vector<Vector> points;
  for (int s = 0; s < flags.samples; ++s) points.push_back(sample_start(ps.box, flags.seed, s));
  return points;
}

std::string describe(const Vector& x) {
  std::string s = "(";
  for (Index j = 0; j < x.size(); ++j) s += (j ? "," : "") + format_double(x(j));
  return s + ")";
}

void check_jacobians(const Problem& ps, const std::vector<Vector>& points, CheckReport& report) {
  double worst = 0.0;
  for (const Vector& x : points) {
    for (int i = 0; i < ps.p; ++i) {
      try {
        const Matrix J = ps.jacobian(i, x);
        const Matrix fd = finite_difference_jacobian(ps, i, x);
        const double dev = ((J - fd).array().abs() / (1.0 + J.array().abs())).maxCoeff();
        worst = std::max(worst, dev);
      } catch (const Error& e) {
        report.fail("jacobian", std::string(e.what()) + " at x=" + describe(x));
        return;
      }
    }
  }
  std::ostringstream detail;
  detail << "max relative deviation " << worst << " over " << points.size() << " points";
  if (worst <= 1e-5) {
    report.pass("jacobian", detail.str());
  } else {
    report.fail("jacobian", detail.str() + " exceeds 1e-5");
  }
}

void check_gerstewitz(const Problem& ps, const std::vector<Vector>& points, CheckReport& report) {
  double worst = 0.0;
  for (const Vector& x : points) {
    for (const Vector& v : eval_F(ps, x)) {
      worst = std::max(worst, std::abs(gerstewitz(ps.cone, v) - gerstewitz_bisect(ps.cone, v)) / (1.0 + v.norm()));
    }
  }
  std::ostringstream detail;
  detail << "closed form vs bisection, max scaled deviation " << worst;
  (worst <= 1e-10 ? report.pass("oracle gerstewitz", detail.str()) : report.fail("oracle gerstewitz", detail.str()));
}

void check_min(const Problem& ps, const std::vector<Vector>& points, CheckReport& report) {
  for (const Vector& x : points) {
    const auto values = eval_F(ps, x);
    if (minimal_elements(ps.cone, values) != brute_min(ps.cone, values) ||
        weakly_minimal_elements(ps.cone, values) != brute_wmin(ps.cone, values)) {
      report.fail("oracle min", "Min/WMin disagree with the pairwise filter at x=" + describe(x));
      return;
    }
  }
  report.pass("oracle min", "Min and WMin match the pairwise filter at " + std::to_string(points.size()) + " points");
}

void check_subproblem(const Problem& ps, const std::vector<Vector>& points, CheckReport& report) {
  if (ps.n > 2) {
    report.fail("oracle subproblem", "grid oracle needs n <= 2");
    return;
  }
  const auto sc = scalarize(ps);
  const HessianStore store = init_store(ps.n, ps.p, sc.rows());
  double worst = 0.0;
  for (const Vector& x : points) {
    const auto values = eval_F(ps, x);
    const MinimalStructure ms = analyze_minimal(ps.cone, values);
    const PartitionElement a = *partition_iter(ms).next();
    const auto gradients = scalarized_gradients(sc, eval_jacobians(ps, x));
    const auto terms = collect_terms(store, gradients, a);
    const MinMaxSolution sol = solve_minmax(terms);
    double radius = 0.0;
    for (const auto& t : terms) radius = std::max(radius, t.g.norm());
    radius = 1.0 + 1.1 * radius;
    const double step = std::max(1e-3, 2.0 * radius / (ps.n == 1 ? 1e5 : 1e3));
    const GridMinMax ref = grid_minmax(terms, GridSpec::around(Vector::Zero(ps.n), radius, step));
    worst = std::max({worst, std::abs(ref.phi - sol.phi), (ref.u - sol.u).lpNorm<Eigen::Infinity>()});
  }
  std::ostringstream detail;
  detail << "max |phi| / |u| deviation from grid search " << worst;
  (worst <= 1e-4 ? report.pass("oracle subproblem", detail.str()) : report.fail("oracle subproblem", detail.str()));
}

void check_weakmin(const Problem& ps, const CheckFlags& flags, CheckReport& report) {
  SolverFlags sf;
  sf.x0 = flags.x0;
  sf.cfg.seed = flags.seed;
  const Vector x0 = start_point(ps, sf);
  const IterateTrace trace = run(ps, x0, SolverConfig{});
  if (trace.status != Status::Converged) {
    report.fail("oracle weakmin", std::string("solver ended ") + to_string(trace.status));
    return;
  }
  const Vector& xbar = trace.x_final();
  GridSpec grid = flags.radius > 0.0 ? GridSpec::around(xbar, flags.radius, flags.step)
                                     : GridSpec::uniform(ps.box.lo, ps.box.hi, flags.step);
  const auto result = certify_weak_minimality(ps, xbar, grid);
  if (result.verdict == Verdict::Violated) {
    report.fail("oracle weakmin", "x=" + describe(*result.witness) + " strictly dominates F(" + describe(xbar) + ")");
  } else {
    report.pass("oracle weakmin", "no dominating point among " + std::to_string(result.scanned) +
                                      " grid points around x=" + describe(xbar) + " (resolution-relative)");
  }
}

int cmd_check(const CheckFlags& flags, std::ostream& out) {
  CheckReport report(out);
  Problem ps;
  try {
    ps = resolve_problem(flags.problem);
    report.pass("parse", ps.name + " with n=" + std::to_string(ps.n) + ", m=" + std::to_string(ps.m) +
                             ", p=" + std::to_string(ps.p));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    report.fail(e.code() == ErrorCode::RankDeficient || e.code() == ErrorCode::NotInterior ? "cone" : "parse",
                e.what());
    return report.finish();
  }
  try {
    validate_problem(ps);
    report.pass("cone", "rank and interior point verified");
  } catch (const Error& e) {
    report.fail("validate", e.what());
    return report.finish();
  }
  const auto points = sample_points(ps, flags);
  check_jacobians(ps, points, report);
  for (const auto& oracle : flags.oracles) {
    try {
      if (oracle == "gerstewitz") check_gerstewitz(ps, points, report);
      if (oracle == "min") check_min(ps, points, report);
      if (oracle == "subproblem") check_subproblem(ps, points, report);
      if (oracle == "weakmin") check_weakmin(ps, flags, report);
    } catch (const Error& e) {
      report.fail("oracle " + oracle, e.what());
    }
  }
  return report.finish();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasi-Newton and steepest-descent solvers for set optimization", "setopt"};
  app.require_subcommand(1);

  SolverFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "solve one instance and write trace CSV + summary JSON");
  solve_flags.add(*solve, true);
  solve->add_flag("--trace-images", solve_flags.cfg.trace_images, "store F(x_k) in every record");

  SolverFlags plot_flags;
  auto* plot = app.add_subcommand("plot-data", "write image-space and decision-space CSVs of a run");
  plot_flags.add(*plot, true);

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "multi-start benchmark with statistics");
  bench_flags.solver.add(*bench, false);
  bench->add_option("--starts", bench_flags.starts, "number of random starts");
  bench->add_option("--methods", bench_flags.methods, "comma separated: qnm,sd");
  bench->add_option("--box", bench_flags.box, "sample box override lo:hi,lo:hi (use --box=...)");
  bench->add_option("--jobs", bench_flags.jobs, "parallel workers");

  CheckFlags check_flags;
  auto* check = app.add_subcommand("check", "validate a problem and audit Jacobians");
  check->add_option("--problem", check_flags.problem, "built-in name or problem file")->required();
  check->add_option("--samples", check_flags.samples, "random points for the audits");
  check->add_option("--seed", check_flags.seed, "seed for the sample points");
  check->add_option("--oracle", check_flags.oracles, "extra oracle: gerstewitz|min|subproblem|weakmin")
      ->check(CLI::IsMember({"gerstewitz", "min", "subproblem", "weakmin"}));
  check->add_option("--x0", check_flags.x0, "start point for --oracle weakmin");
  check->add_option("--step", check_flags.step, "grid step for --oracle weakmin");
  check->add_option("--radius", check_flags.radius, "local grid radius for --oracle weakmin (0 = sample box)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(solve_flags, false, out);
    if (*plot) return cmd_solve(plot_flags, true, out);
    if (*bench) return cmd_bench(bench_flags, out);
    return cmd_check(check_flags, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::IoError ? kExitIo : kExitUsage;
  }
}

}  // namespace setopt
