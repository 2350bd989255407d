#pragma once

#include <cstddef>
#include <cstdint>

#include "gapscan/gap_estimator.hpp"
#include "gapscan/linalg.hpp"
#include "gapscan/models.hpp"
#include "gapscan/tensor.hpp"

namespace gapscan {

enum class Sublattice { A = 0, B = 1 };

/// Two-site infinite MPS in Vidal form:
///   ... lambda_b  Gamma_a  lambda_a  Gamma_b  lambda_b ...
/// Site tensors carry the labels "l", "p", "r".
struct IMpsState {
  RealTensor gamma_a;
  RealTensor gamma_b;
  /// Bond to the right of A (the A-B bond).
  BondWeights lambda_a;
  /// Bond to the right of B (the B-A bond).
  BondWeights lambda_b;

  std::size_t local_dim() const { return gamma_a.dim("p"); }
  std::size_t bond_dimension() const;
  const RealTensor& gamma(Sublattice s) const { return s == Sublattice::A ? gamma_a : gamma_b; }
  /// Weights on the bond to the right of sublattice `s`.
  const BondWeights& lambda(Sublattice s) const { return s == Sublattice::A ? lambda_a : lambda_b; }
};

inline constexpr double kPinvFloor = 1e-12;

/// D = 1 product state with an independent random real unit vector per sublattice.
IMpsState random_product_imps(int local_dim, std::uint64_t seed);

struct TebdStep {
  IMpsState state;
  double discarded_weight = 0.0;
  /// Outer bond weights that fell below kPinvFloor and were not inverted.
  std::size_t floored = 0;
};

/// One Vidal update of the bond to the right of `bond` with a d^2 x d^2 gate
/// whose row index is (left physical, right physical).
TebdStep tebd_step(const IMpsState& s, const RMatrix& gate, Sublattice bond,
                   std::size_t d_max, double rel_tol = 1e-12);

/// Canonical-form expectation of the terms anchored on sublattice `anchor`.
/// Supports contiguous terms along the chain of up to four sites.
double expectation_terms_imps_at(const IMpsState& s, const OperatorTerms& terms, Sublattice anchor);
/// Sum over both anchors, i.e. per two-site unit cell.
double expectation_terms_imps(const IMpsState& s, const OperatorTerms& terms);

/// Largest deviation from the left and right isometry conditions, with
/// each contraction normalized by its mean diagonal.
double canonical_residual(const IMpsState& s);

struct Canonicalization {
  IMpsState state;
  /// max |lambda_new - lambda_old| over both bonds, zero padded.
  double lambda_change = 0.0;
  std::size_t iterations = 0;
};

/// Restores exact Vidal form through the dominant transfer-matrix fixed points.
Canonicalization canonicalize(const IMpsState& s, double tol = 1e-14, std::size_t max_iter = 5000);

/// Two-site bond Hamiltonian (row index = left, right physical) collected
/// from a 1D model: bond terms plus half of each site term on either end.
RMatrix bond_hamiltonian_1d(const OperatorTerms& h);

struct Schedule1D {
  double dtau = 0.05;
  double tau_max = 40.0;
  std::size_t measure_every = 1;
  double rel_tol = 1e-12;
  /// Sublattice whose commutator terms are measured. The uniform sum cancels
  /// for excitations at momentum pi (the Haldane magnon).
  Sublattice anchor = Sublattice::A;
};

struct Evolution1D {
  GapTrace trace;
  IMpsState final_state;
  double max_discarded_weight = 0.0;
  std::size_t floored = 0;
};

/// Second-order Trotter sweep (A bonds dtau/2, B bonds dtau, A bonds dtau/2)
/// recording C(tau) = ln |<i[H,O]>| until tau_max or underflow.
Evolution1D run_evolution_1d(const Model& model, const Schedule1D& schedule, std::size_t d_max,
                             std::uint64_t seed);

}  // namespace gapscan
