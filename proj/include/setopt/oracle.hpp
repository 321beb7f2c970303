#pragma once

// Brute-force reference implementations. They follow the definitions literally
// and carry explicit cost guards.

#include "setopt/common.hpp"
#include "setopt/cone.hpp"
#include "setopt/direction.hpp"
#include "setopt/problem.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace setopt {

inline constexpr std::uint64_t kMaxGridPoints = 10'000'000;

/// Axis-aligned grid lo + k * step, k = 0 .. floor((hi - lo) / step).
struct GridSpec {
  Vector lo;
  Vector hi;
  Vector step;

  static GridSpec uniform(const Vector& lo, const Vector& hi, double step);
  static GridSpec around(const Vector& center, double radius, double step);

  Index dim() const { return lo.size(); }
  std::uint64_t points_along(Index d) const;
  /// Saturates at UINT64_MAX.
  std::uint64_t count() const;
  /// Throws InvalidConfig for malformed specs and GridTooLarge past kMaxGridPoints.
  void validate() const;
  Vector point(std::uint64_t flat) const;
};

/// min { t : t e - y in K } by bisection on [-B, B], B = 1 + L |y|.
double gerstewitz_bisect(const Cone& c, const Vector& y, double tol = 1e-12);

/// O(p^2) transcriptions of Min and WMin.
std::vector<int> brute_min(const Cone& c, const std::vector<Vector>& values);
std::vector<int> brute_wmin(const Cone& c, const std::vector<Vector>& values);

struct GridMinMax {
  Vector u;
  double phi = 0.0;
};

/// Exhaustive min over the grid of max_t theta_t(u). With `refine` (n <= 3) the grid
/// incumbent is then improved by nested golden-section search over the grid box.
GridMinMax grid_minmax(std::span<const QuadraticTerm> terms, const GridSpec& grid, bool refine = true);

enum class Verdict { Violated, NoneFoundAtResolution };

struct WeakMinimalityResult {
  Verdict verdict = Verdict::NoneFoundAtResolution;
  std::optional<Vector> witness;
  std::uint64_t scanned = 0;
};

/// Searches the grid for x with F(xbar) contained in F(x) + int K, i.e. every f^i(xbar)
/// strictly dominated by some f^j(x) with slack above `margin` in every cone row.
/// Grid points where F is undefined are skipped.
WeakMinimalityResult certify_weak_minimality(const Problem& ps, const Vector& xbar,
                                             const GridSpec& grid, double margin = 0.0);

/// Central differences with step h (1 + |x_k|).
Matrix finite_difference_jacobian(const Problem& ps, int i, const Vector& x, double h = 1e-6);

}  // namespace setopt
