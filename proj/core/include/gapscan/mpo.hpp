#pragma once

#include <cstddef>
#include <vector>

#include "gapscan/linalg.hpp"
#include "gapscan/tensor.hpp"

namespace gapscan {

/// Upper-triangular Hamiltonian MPO for a line,
///
///   W = [ 1  C  D ]
///       [ 0  A  B ]
///       [ 0  0  1 ]
///
/// so that H_line = sum_x D_x + sum_x sum_a C_{a,x} B_{a,x+1} (A empty for
/// nearest-neighbour lines).
struct MpoBlocks {
  int local_dim = 2;
  std::vector<RMatrix> c;
  std::vector<RMatrix> b;
  std::vector<std::vector<RMatrix>> a;
  RMatrix d;

  std::size_t channels() const { return c.size(); }
};

/// Splits `bond_term` (row index = left, right physical) into single-site
/// products by an operator SVD; D = field_fraction * field_term.
MpoBlocks hamiltonian_line_mpo(const RMatrix& bond_term, const RMatrix& field_term,
                               double field_fraction);

/// Hamiltonian MPO as a tensor with labels wl, wr, in, out (dimension channels + 2).
RealTensor hamiltonian_mpo_tensor(const MpoBlocks& blocks);

/// Uniform MPO for exp(-dtau H_line). Labels wl, wr, in, out; W maps in -> out.
struct Mpo {
  RealTensor w;
  std::size_t virtual_dim = 1;
  double dtau = 0.0;
  int axis = 0;

  int local_dim() const { return static_cast<int>(w.dim("in")); }
};

/// WII construction. The bond channels are taken from the operator SVD of
/// exp(-dtau h_bond) - 1, which keeps the per-site error O(dtau^2) and makes
/// the MPO exact when either the bond or the field vanishes (for commuting
/// bond factors such as Z Z).
Mpo build_wii(const MpoBlocks& blocks, double dtau, int axis = 0);

/// Identity MPO with D_w = 1.
Mpo identity_mpo(int local_dim, int axis = 0);

/// Dense operator of an open N-site line of `w`, entering at virtual index
/// `left` and leaving at `right`. Site 0 is the most significant factor.
RMatrix contract_line(const RealTensor& w, std::size_t n, std::size_t left, std::size_t right);

/// Dense H_line on an open chain of n sites from the blocks (bond terms on
/// n-1 links, D on every site).
RMatrix dense_line_hamiltonian(const MpoBlocks& blocks, std::size_t n);

}  // namespace gapscan
