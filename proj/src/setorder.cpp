#include "setopt/setorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace setopt {

namespace {

// Candidate filter ordered by the score s(v) = 1^T A v. If v_j <= v_i then
// A(v_i - v_j) >= 0, so s_j <= s_i up to rounding; only the prefix of the
// score order plus a rounding window can hold a dominator of i.
template <typename Dominates>
std::vector<int> filter_by_score(const Cone& c, const std::vector<Vector>& values, double tol,
                                 Dominates dominates) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "empty image set");
  const int p = static_cast<int>(values.size());
  const Vector weights = c.A().colwise().sum().transpose();
  std::vector<double> score(p);
  std::vector<double> scale(p);
  for (int i = 0; i < p; ++i) {
    detail::check_dim(c, values[i]);
    score[i] = weights.dot(values[i]);
    scale[i] = weights.cwiseAbs().dot(values[i].cwiseAbs());
  }
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] < score[b]; });

  std::vector<int> kept;
  for (int pos = 0; pos < p; ++pos) {
    const int i = order[pos];
    bool dominated = false;
    for (int j : kept) {
      if (dominates(j, i)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) {
      const double limit = score[i] + 1e-12 * (1.0 + scale[i]) + c.rows() * tol;
      for (int other = 0; other < p && !dominated; ++other) {
        const int j = order[other];
        if (score[j] > limit) break;
        if (j != i && dominates(j, i)) dominated = true;
      }
    }
    if (!dominated) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<int> minimal_elements(const Cone& c, const std::vector<Vector>& values, double tol) {
  return filter_by_score(c, values, tol, [&](int j, int i) {
    return values[j] != values[i] && leq(c, values[j], values[i], tol);
  });
}

std::vector<int> weakly_minimal_elements(const Cone& c, const std::vector<Vector>& values,
                                         double tol) {
  return filter_by_score(c, values, tol, [&](int j, int i) { return lt(c, values[j], values[i], tol); });
}

std::uint64_t MinimalStructure::partition_count() const {
  std::uint64_t count = 1;
  for (const auto& cls : classes) {
    const std::uint64_t size = cls.members.size();
    if (count > std::numeric_limits<std::uint64_t>::max() / size) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= size;
  }
  return count;
}

MinimalStructure group_minimal_values(const Cone& c, const std::vector<Vector>& values,
                                      const std::vector<int>& minimal, double tol_group) {
  (void)c;
  MinimalStructure ms;
  ms.minimal = minimal;
  std::sort(ms.minimal.begin(), ms.minimal.end());
  const int k = static_cast<int>(ms.minimal.size());
  DisjointSets sets(k);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const double dist = (values[ms.minimal[a]] - values[ms.minimal[b]]).lpNorm<Eigen::Infinity>();
      if (dist <= tol_group) sets.unite(a, b);
    }
  }
  // Roots are the smallest position in each component, so visiting positions in
  // order yields classes sorted by smallest member.
  std::vector<int> class_of(k, -1);
  for (int a = 0; a < k; ++a) {
    const int root = sets.find(a);
    if (class_of[root] < 0) {
      class_of[root] = static_cast<int>(ms.classes.size());
      ms.classes.push_back({{}, values[ms.minimal[a]]});
    }
    ms.classes[class_of[root]].members.push_back(ms.minimal[a]);
  }
  return ms;
}

MinimalStructure analyze_minimal(const Cone& c, const std::vector<Vector>& values, double tol_group,
                                 double tol_order) {
  auto ms = group_minimal_values(c, values, minimal_elements(c, values, tol_order), tol_group);
  ms.weakly_minimal = weakly_minimal_elements(c, values, tol_order);
  return ms;
}

PartitionIterator::PartitionIterator(const MinimalStructure& ms)
    : ms_(&ms), odometer_(ms.classes.size(), 0), done_(ms.classes.empty()) {}

std::optional<PartitionElement> PartitionIterator::next() {
  if (done_) return std::nullopt;
  PartitionElement a;
  a.indices.resize(odometer_.size());
  for (std::size_t j = 0; j < odometer_.size(); ++j) {
    a.indices[j] = ms_->classes[j].members[odometer_[j]];
  }
  // Last class varies fastest.
  std::size_t j = odometer_.size();
  while (j > 0) {
    --j;
    if (++odometer_[j] < ms_->classes[j].members.size()) return a;
    odometer_[j] = 0;
  }
  done_ = true;
  return a;
}

}  // namespace setopt
