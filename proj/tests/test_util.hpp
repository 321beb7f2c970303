#pragma once

#include "setopt/common.hpp"

#include <random>
#include <vector>

namespace setopt::testing {

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index k = 0;
  for (double x : values) v(k++) = x;
  return v;
}

inline Matrix mat(Index rows, Index cols, std::initializer_list<double> values) {
  Matrix A(rows, cols);
  auto it = values.begin();
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) A(r, c) = *it++;
  return A;
}

inline Vector random_vector(std::mt19937_64& gen, Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector v(n);
  for (Index k = 0; k < n; ++k) v(k) = dist(gen);
  return v;
}

}  // namespace setopt::testing
