#pragma once

// Minimal elements of finite image sets F(x) = {f^1(x), ..., f^p(x)} and the
// partition set used to pick one representative per minimal value.

#include "setopt/common.hpp"
#include "setopt/cone.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace setopt {

/// Indices i (0-based, ascending) with no j such that values_j <= values_i and values_j != values_i.
std::vector<int> minimal_elements(const Cone& c, const std::vector<Vector>& values, double tol = 0.0);

/// Indices i (0-based, ascending) with no j such that values_j < values_i.
std::vector<int> weakly_minimal_elements(const Cone& c, const std::vector<Vector>& values,
                                         double tol = 0.0);

struct MinimalClass {
  std::vector<int> members;  // ascending
  Vector representative;     // value of the smallest member
};

struct MinimalStructure {
  std::vector<int> minimal;
  std::vector<int> weakly_minimal;
  std::vector<MinimalClass> classes;  // ordered by smallest member

  std::size_t w() const { return classes.size(); }
  /// |P_x| = product of class sizes; saturates at UINT64_MAX.
  std::uint64_t partition_count() const;
};

/// Clusters the minimal indices into classes of (nearly) equal value: connected
/// components of the graph joining i, j when |values_i - values_j|_inf <= tol_group.
MinimalStructure group_minimal_values(const Cone& c, const std::vector<Vector>& values,
                                      const std::vector<int>& minimal, double tol_group = 1e-8);

/// Min, WMin and grouping in one call.
MinimalStructure analyze_minimal(const Cone& c, const std::vector<Vector>& values,
                                 double tol_group = 1e-8, double tol_order = 0.0);

/// One selector a = (a_1, ..., a_w) with a_j drawn from class j.
struct PartitionElement {
  std::vector<int> indices;

  friend bool operator==(const PartitionElement&, const PartitionElement&) = default;
};

/// Lazy lexicographic walk over the Cartesian product of the classes.
class PartitionIterator {
 public:
  explicit PartitionIterator(const MinimalStructure& ms);

  /// The next element, or nullopt once the product is exhausted.
  std::optional<PartitionElement> next();

 private:
  const MinimalStructure* ms_;
  std::vector<std::size_t> odometer_;
  bool done_ = false;
};

inline PartitionIterator partition_iter(const MinimalStructure& ms) { return PartitionIterator(ms); }

}  // namespace setopt
