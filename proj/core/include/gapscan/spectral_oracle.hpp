#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gapscan/linalg.hpp"

namespace gapscan {

/// Distinct energy levels of a small Hermitian matrix with an orthonormal
/// basis per level. Projectors are formed on demand from the level bases.
struct SpectralDecomposition {
  std::vector<double> energies;
  std::vector<CMatrix> level_bases;
  std::size_t dimension = 0;

  std::size_t levels() const { return energies.size(); }
  CMatrix projector(std::size_t n) const;
  CVector project(std::size_t n, const CVector& v) const;
  CVector apply_hamiltonian(const CVector& v) const;
  CMatrix hamiltonian() const;
};

struct SpectralOptions {
  /// Eigenvalues closer than this share a level; default 1e-10 * spectral range.
  std::optional<double> degeneracy_tol;
  std::size_t max_dimension = 4096;
};

SpectralDecomposition spectral_decompose(const CMatrix& h, const SpectralOptions& options = {});

/// Normalized exp(-tau H) phi0, evaluated with exp(tau E0) factored out.
CVector evolve_exact(const SpectralDecomposition& d, const CVector& phi0, double tau);

/// <phi(tau)|[H,O]|phi(tau)> evaluated directly on the propagated state.
Complex commutator_expectation_exact(const SpectralDecomposition& d, const CMatrix& op,
                                     const CVector& phi0, double tau);

/// The same quantity from the level double sum
///   N^2 sum_{l,k} exp(-tau(E_l+E_k)) (E_l-E_k) <phi0|P_l O P_k|phi0>.
Complex commutator_expectation_spectral(const SpectralDecomposition& d, const CMatrix& op,
                                        const CVector& phi0, double tau);

/// ln |level double sum|, computed in the log domain so large tau cannot underflow.
double log_abs_commutator_spectral(const SpectralDecomposition& d, const CMatrix& op,
                                   const CVector& phi0, double tau);

enum class OverlapKind { FirstGap, SecondGap, Neither };

const char* to_string(OverlapKind kind);

struct OverlapClass {
  OverlapKind kind = OverlapKind::Neither;
  /// <phi0|P0 O P1|phi0> for the normalized phi0.
  Complex first_element;
  /// <phi0|P0 O P2|phi0>, zero when there are only two levels.
  Complex second_element;
};

/// Default imaginary tolerance is 1e-10 * ||O|| (operator norm).
OverlapClass classify_overlap(const SpectralDecomposition& d, const CMatrix& op,
                              const CVector& phi0, std::optional<double> imag_tol = {});

struct SlopeCheck {
  OverlapKind kind = OverlapKind::Neither;
  double slope = 0.0;
  double intercept = 0.0;
  /// E1-E0 for FirstGap, E2-E0 for SecondGap.
  double expected_gap = 0.0;
  std::vector<double> taus;
  std::vector<double> log_values;
};

/// Slowest rate at which the subleading level pairs die out relative to the
/// leading one: E2 - E1 for FirstGap, min(E1 - E0, E3 - E2) for SecondGap.
double subleading_rate(const SpectralDecomposition& d, OverlapKind kind);

/// Uniform grid over tau in [30, 40] / subleading_rate, where the relative
/// correction to the slope is below e^-30. Two-level spectra use E1 - E0.
std::vector<double> default_slope_window(const SpectralDecomposition& d, OverlapKind kind,
                                         std::size_t points = 41);

/// Least-squares slope of ln|<[H,O]>(tau)| over `tau_grid`.
SlopeCheck gap_slope_check(const SpectralDecomposition& d, const CMatrix& op,
                                const CVector& phi0, std::span<const double> tau_grid);

}  // namespace gapscan
