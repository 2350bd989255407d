#include "gapscan/spectral_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gapscan/error.hpp"

namespace gapscan {

namespace {

CVector normalized(const CVector& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw InputError("initial state must be nonzero");
  return v / n;
}

void check_dims(const SpectralDecomposition& d, const CVector& phi0) {
  if (static_cast<std::size_t>(phi0.size()) != d.dimension) {
    throw InputError("state dimension does not match the decomposition");
  }
}

double operator_norm(const CMatrix& op) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(op, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

CMatrix SpectralDecomposition::projector(std::size_t n) const {
  const CMatrix& v = level_bases.at(n);
  return v * v.adjoint();
}

CVector SpectralDecomposition::project(std::size_t n, const CVector& v) const {
  const CMatrix& b = level_bases.at(n);
  return b * (b.adjoint() * v);
}

CVector SpectralDecomposition::apply_hamiltonian(const CVector& v) const {
  CVector out = CVector::Zero(v.size());
  for (std::size_t n = 0; n < levels(); ++n) out += energies[n] * project(n, v);
  return out;
}

CMatrix SpectralDecomposition::hamiltonian() const {
  CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(dimension),
                            static_cast<Eigen::Index>(dimension));
  for (std::size_t n = 0; n < levels(); ++n) h += energies[n] * projector(n);
  return h;
}

SpectralDecomposition spectral_decompose(const CMatrix& h, const SpectralOptions& options) {
  if (h.rows() != h.cols() || h.rows() == 0) throw InputError("Hamiltonian must be square");
  if (static_cast<std::size_t>(h.rows()) > options.max_dimension) {
    throw InputError("Hamiltonian dimension exceeds the oracle cap");
  }
  if (!is_hermitian(h, 1e-12)) throw InputError("Hamiltonian is not Hermitian");

  const CMatrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed");
  const RVector& w = es.eigenvalues();
  const CMatrix& vecs = es.eigenvectors();
  const double range = w(w.size() - 1) - w(0);
  const double tol = options.degeneracy_tol.value_or(1e-10 * range);

  SpectralDecomposition d;
  d.dimension = static_cast<std::size_t>(h.rows());
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= w.size(); ++i) {
    if (i == w.size() || w(i) - w(i - 1) > tol) {
      const Eigen::Index count = i - start;
      d.energies.push_back(w.segment(start, count).mean());
      d.level_bases.push_back(vecs.middleCols(start, count));
      start = i;
    }
  }
  return d;
}

CVector evolve_exact(const SpectralDecomposition& d, const CVector& phi0, double tau) {
  check_dims(d, phi0);
  if (tau < 0.0) throw InputError("tau must be non-negative");
  const CVector v = normalized(phi0);
  CVector out = CVector::Zero(v.size());
  const double e0 = d.energies.front();
  for (std::size_t n = 0; n < d.levels(); ++n) {
    const double w = std::exp(-tau * (d.energies[n] - e0));
    if (w == 0.0) continue;
    out += w * d.project(n, v);
  }
  const double norm = out.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericError("evolve_exact: all retained amplitudes underflowed");
  }
  return out / norm;
}

Complex commutator_expectation_exact(const SpectralDecomposition& d, const CMatrix& op,
                                     const CVector& phi0, double tau) {
  const CVector phi = evolve_exact(d, phi0, tau);
  const CVector hphi = d.apply_hamiltonian(phi);
  const CVector ophi = op * phi;
  // <phi|HO|phi> - <phi|OH|phi>
  return hphi.dot(ophi) - ophi.dot(hphi);
}

namespace {

struct LevelTerms {
  std::vector<CVector> components;  // P_n phi0
  std::vector<double> weights;      // ||P_n phi0||^2
};

LevelTerms level_terms(const SpectralDecomposition& d, const CVector& phi0) {
  check_dims(d, phi0);
  const CVector v = normalized(phi0);
  LevelTerms t;
  for (std::size_t n = 0; n < d.levels(); ++n) {
    t.components.push_back(d.project(n, v));
    t.weights.push_back(t.components.back().squaredNorm());
  }
  return t;
}

// ln of sum_n exp(-2 tau (E_n - E0)) ||P_n phi0||^2.
double log_norm_sum(const SpectralDecomposition& d, const LevelTerms& t, double tau) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < d.levels(); ++n) {
    if (t.weights[n] > 0.0) best = std::min(best, 2.0 * tau * (d.energies[n] - d.energies[0]));
  }
  double s = 0.0;
  for (std::size_t n = 0; n < d.levels(); ++n) {
    if (t.weights[n] == 0.0) continue;
    s += t.weights[n] * std::exp(-(2.0 * tau * (d.energies[n] - d.energies[0]) - best));
  }
  return -best + std::log(s);
}

}  // namespace

double log_abs_commutator_spectral(const SpectralDecomposition& d, const CMatrix& op,
                                   const CVector& phi0, double tau) {
  const LevelTerms t = level_terms(d, phi0);
  const double e0 = d.energies.front();
  const std::size_t n = d.levels();
  std::vector<Complex> coeff;
  std::vector<double> expo;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < n; ++l) {
    const CVector ok = op.adjoint() * t.components[l];  // O^dagger P_l phi0 = O P_l phi0
    for (std::size_t k = 0; k < n; ++k) {
      if (l == k) continue;
      const Complex m = ok.dot(t.components[k]);
      const Complex c = (d.energies[l] - d.energies[k]) * m;
      if (c == Complex(0.0)) continue;
      const double e = tau * (d.energies[l] + d.energies[k] - 2.0 * e0);
      coeff.push_back(c);
      expo.push_back(e);
      best = std::min(best, e);
    }
  }
  if (coeff.empty()) return -std::numeric_limits<double>::infinity();
  Complex s = 0.0;
  for (std::size_t i = 0; i < coeff.size(); ++i) s += coeff[i] * std::exp(-(expo[i] - best));
  return -best + std::log(std::abs(s)) - log_norm_sum(d, t, tau);
}

Complex commutator_expectation_spectral(const SpectralDecomposition& d, const CMatrix& op,
                                        const CVector& phi0, double tau) {
  const LevelTerms t = level_terms(d, phi0);
  const double e0 = d.energies.front();
  Complex s = 0.0;
  for (std::size_t l = 0; l < d.levels(); ++l) {
    const CVector ol = op * t.components[l];
    for (std::size_t k = 0; k < d.levels(); ++k) {
      const double w = std::exp(-tau * (d.energies[l] + d.energies[k] - 2.0 * e0));
      // <phi0|P_l O P_k|phi0> = (O P_l phi0)^dagger P_k phi0 for Hermitian O
      s += w * (d.energies[l] - d.energies[k]) * ol.dot(t.components[k]);
    }
  }
  return s * std::exp(-log_norm_sum(d, t, tau));
}

const char* to_string(OverlapKind kind) {
  switch (kind) {
    case OverlapKind::FirstGap: return "first-gap";
    case OverlapKind::SecondGap: return "second-gap";
    case OverlapKind::Neither: return "neither";
  }
  return "?";
}

OverlapClass classify_overlap(const SpectralDecomposition& d, const CMatrix& op,
                              const CVector& phi0, std::optional<double> imag_tol) {
  if (d.levels() < 2) throw InputError("classify_overlap needs at least two levels");
  check_dims(d, phi0);
  const CVector v = normalized(phi0);
  const double tol = imag_tol.value_or(1e-10 * operator_norm(op));
  const CVector p0 = d.project(0, v);
  OverlapClass out;
  out.first_element = p0.dot(op * d.project(1, v));
  if (d.levels() >= 3) out.second_element = p0.dot(op * d.project(2, v));
  if (std::abs(out.first_element.imag()) > tol) {
    out.kind = OverlapKind::FirstGap;
  } else if (d.levels() >= 3 && std::abs(out.second_element.imag()) > tol) {
    out.kind = OverlapKind::SecondGap;
  }
  return out;
}

double subleading_rate(const SpectralDecomposition& d, OverlapKind kind) {
  if (d.levels() < 2) throw InputError("slope window needs at least two levels");
  const auto& e = d.energies;
  if (d.levels() == 2) return e[1] - e[0];
  if (kind != OverlapKind::SecondGap) return e[2] - e[1];
  double rate = e[1] - e[0];
  if (d.levels() >= 4) rate = std::min(rate, e[3] - e[2]);
  return rate;
}

std::vector<double> default_slope_window(const SpectralDecomposition& d, OverlapKind kind,
                                         std::size_t points) {
  const double scale = subleading_rate(d, kind);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double s = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = (30.0 + 10.0 * s) / scale;
  }
  return grid;
}

SlopeCheck gap_slope_check(const SpectralDecomposition& d, const CMatrix& op,
                                const CVector& phi0, std::span<const double> tau_grid) {
  if (tau_grid.size() < 2) throw InputError("slope check needs at least two tau values");
  SlopeCheck out;
  out.kind = classify_overlap(d, op, phi0).kind;
  switch (out.kind) {
    case OverlapKind::FirstGap: out.expected_gap = d.energies[1] - d.energies[0]; break;
    case OverlapKind::SecondGap: out.expected_gap = d.energies[2] - d.energies[0]; break;
    case OverlapKind::Neither:
      throw InputError("slope check requires a first- or second-gap observable");
  }
  for (double tau : tau_grid) {
    const double c = log_abs_commutator_spectral(d, op, phi0, tau);
    if (!std::isfinite(c)) throw NumericError("commutator amplitude underflowed inside the window");
    out.taus.push_back(tau);
    out.log_values.push_back(c);
  }
  const auto n = static_cast<double>(out.taus.size());
  double mt = 0.0, mc = 0.0;
  for (std::size_t i = 0; i < out.taus.size(); ++i) {
    mt += out.taus[i];
    mc += out.log_values[i];
  }
  mt /= n;
  mc /= n;
  double stt = 0.0, stc = 0.0;
  for (std::size_t i = 0; i < out.taus.size(); ++i) {
    stt += (out.taus[i] - mt) * (out.taus[i] - mt);
    stc += (out.taus[i] - mt) * (out.log_values[i] - mc);
  }
  out.slope = stc / stt;
  out.intercept = mc - out.slope * mt;
  return out;
}

}  // namespace gapscan
