#include "gapscan/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "gapscan/error.hpp"

namespace gapscan {

RMatrix expm_symmetric(const RMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(h);
  const RVector w = (t * es.eigenvalues().array()).exp();
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

CMatrix expm_hermitian(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector w = (t * es.eigenvalues().array()).exp();
  return es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

RMatrix expm_general(const RMatrix& a) { return a.exp(); }

bool is_hermitian(const CMatrix& h, double tol) {
  if (h.rows() != h.cols()) return false;
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  return (h - h.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

RMatrix real_matrix(const CMatrix& m, double tol) {
  if (m.size() > 0 && m.imag().cwiseAbs().maxCoeff() > tol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw InputError("matrix has a non-negligible imaginary part");
  }
  return m.real();
}

}  // namespace gapscan
