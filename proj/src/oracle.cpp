#include "setopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace setopt {

GridSpec GridSpec::uniform(const Vector& lo, const Vector& hi, double step) {
  return {lo, hi, Vector::Constant(lo.size(), step)};
}

GridSpec GridSpec::around(const Vector& center, double radius, double step) {
  return uniform(center.array() - radius, center.array() + radius, step);
}

std::uint64_t GridSpec::points_along(Index d) const {
  return static_cast<std::uint64_t>(std::floor((hi(d) - lo(d)) / step(d) + 1e-9)) + 1;
}

std::uint64_t GridSpec::count() const {
  std::uint64_t total = 1;
  for (Index d = 0; d < dim(); ++d) {
    const std::uint64_t k = points_along(d);
    if (total > std::numeric_limits<std::uint64_t>::max() / k) return std::numeric_limits<std::uint64_t>::max();
    total *= k;
  }
  return total;
}

void GridSpec::validate() const {
  if (lo.size() == 0 || hi.size() != lo.size() || step.size() != lo.size()) {
    throw Error(ErrorCode::InvalidConfig, "grid bounds and steps must share one nonzero dimension");
  }
  for (Index d = 0; d < dim(); ++d) {
    if (!(lo(d) < hi(d)) || !(step(d) > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "grid axis " + std::to_string(d + 1) + " needs lo < hi and step > 0");
    }
  }
  // Checked before count() so huge axes do not overflow the float-to-int conversion.
  double approx = 1.0;
  for (Index d = 0; d < dim(); ++d) approx *= (hi(d) - lo(d)) / step(d) + 1.0;
  if (approx > 2.0 * kMaxGridPoints || count() > kMaxGridPoints) {
    throw Error(ErrorCode::GridTooLarge, "grid has more than " + std::to_string(kMaxGridPoints) + " points");
  }
}

Vector GridSpec::point(std::uint64_t flat) const {
  Vector x(dim());
  for (Index d = dim() - 1; d >= 0; --d) {
    const std::uint64_t k = points_along(d);
    x(d) = lo(d) + static_cast<double>(flat % k) * step(d);
    flat /= k;
  }
  return x;
}

double gerstewitz_bisect(const Cone& c, const Vector& y, double tol) {
  detail::check_dim(c, y);
  const double bound = 1.0 + c.lipschitz() * y.norm();
  auto feasible = [&](double t) { return in_cone(c, Vector(t * c.e() - y)); };
  double lo = -bound, hi = bound;
  if (feasible(lo) || !feasible(hi)) {
    throw Error(ErrorCode::BracketFailure, "bisection bracket does not contain G_e(y)");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (feasible(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

template <typename Dominates>
std::vector<int> brute_filter(const std::vector<Vector>& values, Dominates dominates) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "empty image set");
  std::vector<int> out;
  const int p = static_cast<int>(values.size());
  for (int i = 0; i < p; ++i) {
    bool dominated = false;
    for (int j = 0; j < p && !dominated; ++j) dominated = j != i && dominates(values[j], values[i]);
    if (!dominated) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<int> brute_min(const Cone& c, const std::vector<Vector>& values) {
  return brute_filter(values, [&](const Vector& z, const Vector& v) {
    return z != v && in_cone(c, Vector(v - z));
  });
}

std::vector<int> brute_wmin(const Cone& c, const std::vector<Vector>& values) {
  return brute_filter(values, [&](const Vector& z, const Vector& v) {
    return in_int_cone(c, Vector(v - z));
  });
}

namespace {

double max_theta(std::span<const QuadraticTerm> terms, const Vector& u) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) best = std::max(best, t(u));
  return best;
}

void scan(std::span<const QuadraticTerm> terms, const GridSpec& grid, GridMinMax& best) {
  grid.validate();
  const std::uint64_t total = grid.count();
  for (std::uint64_t k = 0; k < total; ++k) {
    const Vector u = grid.point(k);
    const double v = max_theta(terms, u);
    if (v < best.phi) {
      best.phi = v;
      best.u = u;
    }
  }
}

constexpr Index kMaxRefineDim = 3;

/// min over coordinates k.. of max_theta with the leading coordinates of *u fixed.
/// Partial minimization keeps convexity, so golden section is exact at every level.
double nested_golden(std::span<const QuadraticTerm> terms, const Vector& lo, const Vector& hi, Index k,
                     Vector& u) {
  if (k == u.size()) return max_theta(terms, u);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double c) {
    u(k) = c;
    return nested_golden(terms, lo, hi, k + 1, u);
  };
  double a = lo(k), b = hi(k);
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

}  // namespace

GridMinMax grid_minmax(std::span<const QuadraticTerm> terms, const GridSpec& grid, bool refine) {
  if (terms.empty()) throw Error(ErrorCode::EmptyInput, "min-max oracle without terms");
  if (terms.front().g.size() != grid.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "grid dimension differs from the terms' n");
  }
  GridMinMax best;
  best.phi = std::numeric_limits<double>::infinity();
  scan(terms, grid, best);
  if (refine && grid.dim() <= kMaxRefineDim) {
    Vector u = best.u;
    const double v = nested_golden(terms, grid.lo, grid.hi, 0, u);
    if (v < best.phi) {
      best.phi = v;
      best.u = u;
    }
  }
  return best;
}

WeakMinimalityResult certify_weak_minimality(const Problem& ps, const Vector& xbar,
                                             const GridSpec& grid, double margin) {
  grid.validate();
  if (grid.dim() != ps.n || xbar.size() != ps.n) {
    throw Error(ErrorCode::DimensionMismatch, "grid, x and problem dimensions differ");
  }
  const std::vector<Vector> reference = eval_F(ps, xbar);
  WeakMinimalityResult result;
  const std::uint64_t total = grid.count();
  for (std::uint64_t k = 0; k < total; ++k) {
    const Vector x = grid.point(k);
    std::vector<Vector> images;
    try {
      images = eval_F(ps, x);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DomainError) throw;
      continue;
    }
    ++result.scanned;
    const bool dominates = std::all_of(reference.begin(), reference.end(), [&](const Vector& target) {
      return std::any_of(images.begin(), images.end(),
                         [&](const Vector& v) { return lt(ps.cone, v, target, margin); });
    });
    if (dominates) {
      result.verdict = Verdict::Violated;
      result.witness = x;
      return result;
    }
  }
  return result;
}

Matrix finite_difference_jacobian(const Problem& ps, int i, const Vector& x, double h) {
  Matrix J(ps.m, ps.n);
  for (int k = 0; k < ps.n; ++k) {
    const double step = h * (1.0 + std::abs(x(k)));
    Vector xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    J.col(k) = (ps.value(i, xp) - ps.value(i, xm)) / (2.0 * step);
  }
  return J;
}

}  // namespace setopt
