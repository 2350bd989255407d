#pragma once

#include <complex>

#include <Eigen/Dense>

namespace gapscan {

using Complex = std::complex<double>;

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Kronecker product, first factor most significant.
template <class Derived1, class Derived2>
auto kron(const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b) {
  using Scalar = typename Derived1::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                            a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// exp(t h) for a real symmetric h.
RMatrix expm_symmetric(const RMatrix& h, double t);
/// exp(t h) for a Hermitian h.
CMatrix expm_hermitian(const CMatrix& h, double t);
/// exp(a) for a general real square matrix (scaling and squaring Pade).
RMatrix expm_general(const RMatrix& a);

/// max |h - h^dagger| <= tol * max(1, max|h|).
bool is_hermitian(const CMatrix& h, double tol);
/// Real part of `m`; throws InputError if the imaginary part exceeds `tol`.
RMatrix real_matrix(const CMatrix& m, double tol = 1e-12);

}  // namespace gapscan
