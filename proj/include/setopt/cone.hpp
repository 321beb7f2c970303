#pragma once

// Polyhedral ordering cones K = {z : A z >= 0} with an interior direction e.
//
// The order y <= z holds iff z - y lies in K, and the scalarizing functional
//   G_e(y) = min { t : t e - y in K }
// has the closed form max_q (A y)_q / (A e)_q because t (A e)_q >= (A y)_q must
// hold row by row and every (A e)_q is positive.

#include "setopt/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace setopt {

template <typename Scalar>
class PolyhedralCone {
 public:
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  PolyhedralCone() = default;

  /// Checks pointedness (rank A = m) and solidity (A e > 0), caches A e.
  static PolyhedralCone validate(const MatrixType& A, const VectorType& e) {
    if (A.rows() == 0 || A.cols() == 0) {
      throw Error(ErrorCode::EmptyMatrix, "cone matrix has no rows or no columns");
    }
    if (e.size() != A.cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "interior vector has length " + std::to_string(e.size()) + ", cone has m=" +
                      std::to_string(A.cols()));
    }
    if (A.rows() < A.cols()) {
      throw Error(ErrorCode::RankDeficient, "cone needs at least m rows to be pointed");
    }
    Eigen::FullPivLU<MatrixType> lu(A);
    if (lu.rank() < A.cols()) {
      throw Error(ErrorCode::RankDeficient,
                  "rank(A)=" + std::to_string(lu.rank()) + " < m=" + std::to_string(A.cols()) +
                      "; cone is not pointed");
    }
    PolyhedralCone c;
    c.A_ = A;
    c.e_ = e;
    c.Ae_ = A * e;
    for (Index q = 0; q < c.Ae_.size(); ++q) {
      if (!(c.Ae_(q) > Scalar(0))) {
        throw Error(ErrorCode::NotInterior, "(A e)_" + std::to_string(q + 1) + " = " +
                                                std::to_string(double(c.Ae_(q))) +
                                                " is not positive; e is not interior");
      }
    }
    c.normalized_ = c.Ae_.cwiseInverse().asDiagonal() * A;
    c.lipschitz_ = c.normalized_.rowwise().norm().maxCoeff();
    return c;
  }

  /// The nonnegative orthant R^m_+ with e = (1, ..., 1).
  static PolyhedralCone orthant(Index m) {
    return validate(MatrixType::Identity(m, m), VectorType::Ones(m));
  }

  Index dim() const { return A_.cols(); }
  Index rows() const { return A_.rows(); }
  const MatrixType& A() const { return A_; }
  const VectorType& e() const { return e_; }
  const VectorType& Ae() const { return Ae_; }
  /// Rows A_q / (A e)_q; G_e(y) is the max entry of normalized() * y.
  const MatrixType& normalized() const { return normalized_; }
  /// Lipschitz constant of G_e in the Euclidean norm: max_q |A_q| / (A e)_q.
  Scalar lipschitz() const { return lipschitz_; }

 private:
  MatrixType A_;
  VectorType e_;
  VectorType Ae_;
  MatrixType normalized_;
  Scalar lipschitz_ = Scalar(0);
};

using Cone = PolyhedralCone<double>;

namespace detail {
template <typename Scalar, typename Derived>
void check_dim(const PolyhedralCone<Scalar>& c, const Eigen::MatrixBase<Derived>& z) {
  if (z.size() != c.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "vector has length " + std::to_string(z.size()) +
                                                  ", cone has m=" + std::to_string(c.dim()));
  }
}
}  // namespace detail

template <typename Scalar, typename Derived>
bool in_cone(const PolyhedralCone<Scalar>& c, const Eigen::MatrixBase<Derived>& z, Scalar tol = 0) {
  detail::check_dim(c, z);
  return ((c.A() * z).array() >= -tol).all();
}

template <typename Scalar, typename Derived>
bool in_int_cone(const PolyhedralCone<Scalar>& c, const Eigen::MatrixBase<Derived>& z,
                 Scalar tol = 0) {
  detail::check_dim(c, z);
  return ((c.A() * z).array() > tol).all();
}

/// y <= z in the cone order.
template <typename Scalar, typename D1, typename D2>
bool leq(const PolyhedralCone<Scalar>& c, const Eigen::MatrixBase<D1>& y,
         const Eigen::MatrixBase<D2>& z, Scalar tol = 0) {
  detail::check_dim(c, y);
  return in_cone(c, z - y, tol);
}

/// y < z in the strict cone order (z - y in int K).
template <typename Scalar, typename D1, typename D2>
bool lt(const PolyhedralCone<Scalar>& c, const Eigen::MatrixBase<D1>& y,
        const Eigen::MatrixBase<D2>& z, Scalar tol = 0) {
  detail::check_dim(c, y);
  return in_int_cone(c, z - y, tol);
}

template <typename Scalar, typename Derived>
Scalar gerstewitz(const PolyhedralCone<Scalar>& c, const Eigen::MatrixBase<Derived>& y) {
  detail::check_dim(c, y);
  return (c.normalized() * y).maxCoeff();
}

/// Minimum of G_e over a finite set of image vectors.
template <typename Scalar, typename VectorRange>
Scalar varsigma(const PolyhedralCone<Scalar>& c, const VectorRange& values) {
  if (std::begin(values) == std::end(values)) {
    throw Error(ErrorCode::EmptyInput, "varsigma of an empty set");
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (const auto& v : values) best = std::min(best, gerstewitz(c, v));
  return best;
}

}  // namespace setopt
