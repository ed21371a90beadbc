#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "tsod/error.hpp"
#include "tsod/theta.hpp"

namespace tsod {

/// log det of a symmetric positive definite matrix via Cholesky.
template <typename Derived>
typename Derived::Scalar logdet_spd(const Eigen::MatrixBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  Eigen::LLT<MatrixX<Scalar>> llt(mat);
  if (llt.info() != Eigen::Success) throw SingularPrecision("matrix is not positive definite");
  const auto& l = llt.matrixLLT();
  Scalar acc(0);
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return Scalar(2) * acc;
}

template <typename Derived>
typename Derived::Scalar lambda_min(const Eigen::MatrixBase<Derived>& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixX<typename Derived::Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

template <typename Derived>
typename Derived::Scalar lambda_max(const Eigen::MatrixBase<Derived>& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixX<typename Derived::Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(eig.eigenvalues().size() - 1);
}

/// Symmetric square root S with S S = M for M symmetric PSD.
template <typename Derived>
MatrixX<typename Derived::Scalar> sqrt_psd(const Eigen::MatrixBase<Derived>& sym) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(sym);
  const VectorX<Scalar> root = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Symmetric inverse square root of a positive definite matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> inv_sqrt_spd(const Eigen::MatrixBase<Derived>& sym) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(sym);
  if (eig.eigenvalues()(0) <= Scalar(0)) throw SingularPrecision("matrix is not positive definite");
  const VectorX<Scalar> scale = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();
}

/// ||W^{1/2} X||_F = sqrt(Tr(X^T W X)) for PSD weight W.
template <typename DerivedW, typename DerivedX>
typename DerivedW::Scalar weighted_frobenius(const Eigen::MatrixBase<DerivedW>& weight,
                                             const Eigen::MatrixBase<DerivedX>& x) {
  using Scalar = typename DerivedW::Scalar;
  const Scalar sq = (x.transpose() * weight * x).trace();
  return std::sqrt(std::max(sq, Scalar(0)));
}

}  // namespace tsod
