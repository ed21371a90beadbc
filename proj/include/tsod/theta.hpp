#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "tsod/error.hpp"

namespace tsod {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// System parameters (A, B) of x' = A x + B u + w.
///
/// The stacked view is the (n+m) x n matrix theta with theta^T = [A B], so
/// that x' = theta^T z for z = [x; u]. Estimates, samples and the true system
/// all share this type.
template <typename Scalar>
class ThetaParams {
 public:
  using Matrix = MatrixX<Scalar>;

  ThetaParams() = default;

  ThetaParams(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() < 1 || a_.rows() != a_.cols())
      throw DimensionMismatch("A must be square with n >= 1");
    if (b_.rows() != a_.rows() || b_.cols() < 1)
      throw DimensionMismatch("B must be n x m with m >= 1");
    if (!a_.allFinite() || !b_.allFinite())
      throw DomainError("system matrices must be finite");
  }

  /// Inverse of stacked(): theta is (n+m) x n.
  static ThetaParams from_stacked(const Eigen::Ref<const Matrix>& theta, Eigen::Index n) {
    if (theta.cols() != n || theta.rows() <= n)
      throw DimensionMismatch("stacked theta must be (n+m) x n");
    const Eigen::Index m = theta.rows() - n;
    return ThetaParams(theta.topRows(n).transpose(), theta.bottomRows(m).transpose());
  }

  static ThetaParams zero(Eigen::Index n, Eigen::Index m) {
    return ThetaParams(Matrix::Zero(n, n), Matrix::Zero(n, m));
  }

  Matrix stacked() const {
    Matrix theta(dim(), n());
    theta.topRows(n()) = a_.transpose();
    theta.bottomRows(m()) = b_.transpose();
    return theta;
  }

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  Eigen::Index n() const noexcept { return a_.rows(); }
  Eigen::Index m() const noexcept { return b_.cols(); }
  /// n + m, the regressor dimension.
  Eigen::Index dim() const noexcept { return n() + m(); }

  Scalar frobenius_norm() const {
    return std::sqrt(a_.squaredNorm() + b_.squaredNorm());
  }

  ThetaParams operator+(const ThetaParams& other) const {
    check_same_shape(other);
    return ThetaParams(a_ + other.a_, b_ + other.b_);
  }
  ThetaParams operator-(const ThetaParams& other) const {
    check_same_shape(other);
    return ThetaParams(a_ - other.a_, b_ - other.b_);
  }
  ThetaParams operator*(Scalar s) const { return ThetaParams(a_ * s, b_ * s); }

  bool operator==(const ThetaParams& other) const {
    return n() == other.n() && m() == other.m() && a_ == other.a_ && b_ == other.b_;
  }

  void check_same_shape(const ThetaParams& other) const {
    if (n() != other.n() || m() != other.m())
      throw DimensionMismatch("theta shapes differ");
  }

 private:
  Matrix a_;
  Matrix b_;
};

/// Quadratic stage-cost weights x^T Q x + u^T R u; both symmetric positive definite.
template <typename Scalar>
class CostMatrices {
 public:
  using Matrix = MatrixX<Scalar>;

  CostMatrices() = default;
  CostMatrices(Matrix q, Matrix r) : q_(std::move(q)), r_(std::move(r)) {
    require_spd(q_, "q_matrix");
    require_spd(r_, "r_matrix");
  }

  static CostMatrices identity(Eigen::Index n, Eigen::Index m) {
    return CostMatrices(Matrix::Identity(n, n), Matrix::Identity(m, m));
  }

  const Matrix& q() const noexcept { return q_; }
  const Matrix& r() const noexcept { return r_; }

  Scalar stage_cost(const VectorX<Scalar>& x, const VectorX<Scalar>& u) const {
    return x.dot(q_ * x) + u.dot(r_ * u);
  }

  /// Throws DomainError naming `name` unless `mat` is symmetric positive definite.
  static void require_spd(const Matrix& mat, const std::string& name) {
    if (mat.rows() < 1 || mat.rows() != mat.cols())
      throw DomainError(name + " must be square and non-empty");
    if (!mat.allFinite()) throw DomainError(name + " must be finite");
    const Scalar asym = (mat - mat.transpose()).norm();
    if (asym > Scalar(1e-12) * mat.norm())
      throw DomainError(name + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(mat, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= Scalar(0))
      throw DomainError(name + " is not positive definite");
  }

 private:
  Matrix q_;
  Matrix r_;
};

using Theta = ThetaParams<double>;
using Costs = CostMatrices<double>;

}  // namespace tsod
