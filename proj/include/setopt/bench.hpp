#pragma once

// Multi-start benchmarks and the file formats shared by the CLI.
//
// Starts are drawn uniformly from the sample box by a generator seeded with
// (seed, start index), so results do not depend on the number of workers.
// Statistics only cover runs that ended Converged or MaxIterations.

#include "setopt/problem.hpp"
#include "setopt/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace setopt {

inline constexpr int kFormatVersion = 1;

/// Uniform point of the box for start `index`; deterministic in (seed, index).
Vector sample_start(const SampleBox& box, std::uint64_t seed, std::uint64_t index);

struct BenchConfig {
  int starts = 100;
  std::vector<Method> methods{Method::QuasiNewton, Method::SteepestDescent};
  std::uint64_t seed = 0;
  std::optional<SampleBox> box;
  int jobs = 1;
  SolverConfig solver;
};

struct RunRecord {
  int start = 0;
  Method method = Method::QuasiNewton;
  Vector x0;
  Status status = Status::NumericalError;
  int iterations = 0;
  double seconds = 0.0;
  Vector x_final;
  double phi = 0.0;
  double varsigma = 0.0;
};

/// Runs every method from every start; records ordered by (start, method order).
std::vector<RunRecord> run_bench(const Problem& ps, const BenchConfig& cfg);

struct SummaryStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double mode = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
};

/// Mode is the most frequent value, ties going to the smallest.
SummaryStats summary_stats(std::vector<double> values);
/// Same, except the mode is taken over ceil(value) bins.
SummaryStats time_stats(std::vector<double> seconds);

struct MethodStats {
  Method method = Method::QuasiNewton;
  int included = 0;
  std::optional<SummaryStats> iterations;
  std::optional<SummaryStats> seconds;
  std::map<std::string, int> status_counts;
};

struct BenchStats {
  std::string problem;
  int starts = 0;
  std::uint64_t seed = 0;
  SampleBox box;
  SolverConfig solver;
  std::vector<MethodStats> methods;
};

BenchStats summarize(const Problem& ps, const BenchConfig& cfg, const std::vector<RunRecord>& runs);

/// Iteration statistics and status counts only; byte-stable for fixed inputs.
nlohmann::ordered_json stats_json(const BenchStats& stats);
/// Wall-time statistics, kept apart because they vary run to run.
nlohmann::ordered_json timing_json(const BenchStats& stats);
/// Text table with one row per method: iteration and time statistics.
std::string format_table(const BenchStats& stats);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs);
std::vector<RunRecord> read_runs_csv(std::istream& in);

/// Header: k, x1..xn, u_norm, phi, t, q, varsigma, gap, skips, millis, w, a
/// (a as 1-based indices joined by ';').
void write_trace_csv(std::ostream& out, const IterateTrace& trace);
/// Restores the fields written by write_trace_csv.
std::vector<IterationRecord> read_trace_csv(std::istream& in);

nlohmann::ordered_json summary_json(const Problem& ps, const IterateTrace& trace, const SolverConfig& cfg);

/// Rows k, i (1-based), image components; needs records with images.
void write_images_csv(std::ostream& out, const Problem& ps, const IterateTrace& trace);
void write_iterates_csv(std::ostream& out, const IterateTrace& trace);

}  // namespace setopt
