#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gapscan/linalg.hpp"

namespace gapscan {

using Site = std::array<int, 3>;

enum class UnitCell { SingleSite, Checkerboard };

/// Hypercubic lattice of dimension 1..3 with connectivity z = 2 * dimension.
struct LatticeSpec {
  int dimension = 1;
  int connectivity = 2;
  UnitCell unit_cell = UnitCell::SingleSite;
  std::vector<Site> axes;

  static LatticeSpec hypercubic(int dimension, UnitCell cell = UnitCell::SingleSite);
  LatticeSpec with_unit_cell(UnitCell cell) const { return hypercubic(dimension, cell); }
};

/// One local operator: `matrix` acts on `sites` (offsets from an anchor),
/// with the first listed site as the most significant tensor factor.
struct LocalTerm {
  std::vector<Site> sites;
  CMatrix matrix;
};

/// A translation-invariant operator: sum over anchors x of every term shifted by x.
struct OperatorTerms {
  int local_dim = 2;
  bool hermitian = true;
  std::vector<LocalTerm> terms;

  /// Checks matrix shapes, distinct sites and (when flagged) Hermiticity within 1e-12.
  void validate() const;
  std::size_t max_support() const;
};

/// Critical couplings quoted for reporting. Metadata only.
struct ModelConstants {
  static constexpr double tfim2d_critical_g_over_j = 3.04438;
  static constexpr double tfim2d_critical_j_at_unit_g = 0.329;
  static constexpr std::array<double, 2> tfim3d_critical_j_at_unit_g{0.188, 0.194};
  static constexpr double haldane_reference_gap = 0.410479;
};

namespace spin {
CMatrix identity(int local_dim);
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CMatrix spin1_x();
CMatrix spin1_y();
CMatrix spin1_z();
}  // namespace spin

/// H = -J sum_<ij> Z_i Z_j - g sum_i X_i on the hypercubic lattice.
/// Dimension 1 is accepted for cross-checks against the exactly solvable chain.
std::pair<LatticeSpec, OperatorTerms> tfim(int dimension, double J, double g);
/// O = sum_i Y_i.
OperatorTerms tfim_gap_operator();
/// H = sum_i S_i . S_{i+1} for spin 1.
std::pair<LatticeSpec, OperatorTerms> haldane();
/// O = sum_i S^y_i S^z_{i+1}.
OperatorTerms haldane_gap_operator();

/// i[H, O] as local terms anchored on the positions of the O terms.
///
/// Every pair of overlapping (h, o) placements contributes i(h o - o h) on
/// their joint support; terms on identical supports are merged and
/// numerically zero terms are dropped.
OperatorTerms commutator_terms(const OperatorTerms& h, const OperatorTerms& o);

/// Convenience bundle used by the evolution drivers.
struct Model {
  std::string name;
  LatticeSpec lattice;
  OperatorTerms hamiltonian;
  OperatorTerms gap_operator;
  /// i[H, O]; Hermitian and real for the built-in models.
  OperatorTerms commutator;
  double J = 0.0;
  double g = 0.0;
};

Model make_tfim_model(int dimension, double J, double g);
Model make_haldane_model();

/// Finite cluster used to check terms against dense matrices.
struct Cluster {
  int dimension = 1;
  Site extent{1, 1, 1};
  bool periodic = true;

  std::size_t sites() const;
  std::size_t site_index(const Site& s) const;
};

/// Dense matrix of sum_x T_x(terms) on `cluster`. With open boundaries,
/// placements that leave the cluster are skipped.
CMatrix dense_operator(const OperatorTerms& terms, const Cluster& cluster);

/// Embeds `term` onto the ordered `support` (which must contain its sites).
CMatrix embed_on_support(const LocalTerm& term, const std::vector<Site>& support, int local_dim);

}  // namespace gapscan
