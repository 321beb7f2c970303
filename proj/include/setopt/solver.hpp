#pragma once

// Quasi-Newton (BFGS) descent for set optimization and the steepest-descent baseline.
//
// Each iteration computes Min(F(x_k)), groups equal minimal values into classes,
// minimizes the quadratic model over every selector of the partition set, backtracks
// along u_k until the cone Armijo condition holds for all selected functions, and
// updates every B^{i,q}. The steepest-descent method runs the same loop with B = I.

#include "setopt/common.hpp"
#include "setopt/direction.hpp"
#include "setopt/problem.hpp"
#include "setopt/setorder.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace setopt {

enum class Method { QuasiNewton, SteepestDescent };
enum class Status { Converged, MaxIterations, LineSearchFailure, NumericalError };

const char* to_string(Method method);
const char* to_string(Status status);
/// Accepts "qnm" / "sd" and the long names.
Method parse_method(std::string_view text);

struct SolverConfig {
  double beta = 0.5;
  double nu = 0.6;
  double eps_stop = 1e-3;
  int max_iter = 100;
  int max_backtracks = 60;
  double tol_sub = 1e-10;
  double tol_stat = 1e-8;
  double tol_group = 1e-8;
  double tol_order = 0.0;
  double armijo_slack = 1e-12;
  double c_curv = 1e-8;
  Method method = Method::QuasiNewton;
  std::uint64_t seed = 0;
  /// Store F(x_k) in every record regardless of size.
  bool trace_images = false;
  std::size_t max_partitions = 100000;

  /// Throws InvalidConfig naming the violated range.
  void validate() const;
};

/// Image snapshots are kept when p * m is at most this, or when trace_images is set.
inline constexpr int kImageSnapshotLimit = 512;

struct IterationRecord {
  int k = 0;
  Vector x;
  std::vector<Vector> images;  // F(x_k), possibly empty
  std::vector<int> minimal;
  int w = 0;
  std::uint64_t partitions = 0;
  PartitionElement a;
  Vector u;
  double u_norm = 0.0;
  double phi = 0.0;
  double t = 0.0;  // 0 on the terminal record
  int q = 0;
  double varsigma = 0.0;
  double gap = 0.0;
  bool inner_converged = true;
  int skips = 0;  // BFGS pairs skipped by the update after this step
  double secant_residual = 0.0;
  bool spd_ok = true;
  double min_eigenvalue = 1.0;
  double jacobian_norm = 0.0;
  double millis = 0.0;
};

struct TraceDiagnostics {
  bool descent_recursion = true;
  bool armijo = true;
  bool set_descent = true;
  bool spd = true;
  double max_secant_residual = 0.0;
  /// max |u_k| against 2 C L / rho from the run's own constants.
  double max_u_norm = 0.0;
  double u_bound = 0.0;
  bool bounded = true;
  std::vector<std::string> warnings;
};

struct IterateTrace {
  std::string problem;
  Method method = Method::QuasiNewton;
  std::vector<IterationRecord> records;
  Status status = Status::NumericalError;
  std::string message;
  /// Selected index j (0-based) whose Armijo test kept failing.
  std::optional<int> violating_j;
  TraceDiagnostics diagnostics;

  /// Steps taken: records.size() - 1 except when the last step itself failed.
  int iterations() const;
  const Vector& x_final() const { return records.back().x; }
};

struct ArmijoResult {
  double t = 1.0;
  int q = 0;
  Vector x_next;
};

/// Smallest q with f^{a_j}(x + nu^q u) <= f^{a_j}(x) + beta nu^q J f^{a_j}(x) u for every j.
/// `jacobians` are indexed by function (0-based); entries for a's indices must be set.
/// Throws LineSearchFailure after max_backtracks with the failing j in the message.
ArmijoResult armijo_backtrack(const Problem& ps, const Vector& x, const PartitionElement& a,
                              const Vector& u, const std::vector<Vector>& values,
                              const std::vector<Matrix>& jacobians, const SolverConfig& cfg,
                              int* violating_j = nullptr);

/// Runs the quasi-Newton (or steepest descent) iteration from x0. Module errors end the run with a failure status; they are not thrown.
IterateTrace run(const Problem& ps, const Vector& x0, const SolverConfig& cfg = {});

/// Recomputes the diagnostics of a finished trace.
TraceDiagnostics check_trace(const Problem& ps, const IterateTrace& trace, const SolverConfig& cfg);

struct StationarityReport {
  double phi = 0.0;
  Vector u;
  double u_norm = 0.0;
  bool min_equals_wmin = true;
  /// Heuristic: w unchanged at 8 points on a sphere of radius 1e-4 around x.
  bool w_locally_constant = true;
  bool regular() const { return min_equals_wmin && w_locally_constant; }
};

StationarityReport stationarity_report(const Problem& ps, const Vector& x, const HessianStore& store,
                                       const SolverConfig& cfg = {});

/// Soft check of the local superlinear rate over the last `window` steps: ratios
/// |x_{k+1} - x*| / |x_k - x*| non-increasing and the last step t = 1.
struct RateProbe {
  bool ratios_nonincreasing = true;
  bool unit_last_step = true;
  std::vector<double> ratios;
};

RateProbe rate_probe(const IterateTrace& trace, int window = 5);

}  // namespace setopt
