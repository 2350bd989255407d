#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gapscan/gap_estimator.hpp"
#include "gapscan/linalg.hpp"
#include "gapscan/models.hpp"
#include "gapscan/mpo.hpp"
#include "gapscan/tensor.hpp"

namespace gapscan {

/// Leg label of a site tensor: "x+", "x-", "y+", ... for axis 0, 1, 2.
std::string leg_label(int axis, bool positive);

/// Bond between leg0 of site0 and leg1 of site1. For the one-site cell both
/// ends are site 0 ("a+" meets "a-" of the translated copy).
struct PepsBond {
  std::size_t site0 = 0;
  std::string leg0;
  std::size_t site1 = 0;
  std::string leg1;
  int axis = 0;
  BondWeights lambda;
};

/// Infinite PEPS with diagonal bond weights. Site tensors carry "p" followed
/// by the z virtual legs in axis order (x+, x-, y+, y-, z+, z-).
struct IPepsState {
  LatticeSpec lattice;
  std::vector<RealTensor> sites;
  std::vector<PepsBond> bonds;

  std::size_t local_dim() const { return sites.front().dim("p"); }
  std::size_t bond_dimension() const;
  /// Index of the bond attached to `leg` of `site`.
  std::size_t bond_at(std::size_t site, const std::string& leg) const;
};

/// D = 1 state with an independent random real unit vector on each unit-cell
/// site and all weights (1).
IPepsState random_product_ipeps(const LatticeSpec& lattice, int local_dim, std::uint64_t seed);

struct BondUpdate {
  IPepsState state;
  double discarded_weight = 0.0;
  std::size_t floored = 0;
};

/// Simple update of one bond of a two-site (checkerboard) cell with a gate
/// whose row index is (site0 physical, site1 physical).
BondUpdate simple_update_bond(const IPepsState& s, const RMatrix& gate, std::size_t bond,
                              std::size_t d_max, double rel_tol = 1e-12);

struct SuperorthoOptions {
  double tol = 1e-10;
  std::size_t max_iter = 200;
};

struct Superorthogonalization {
  IPepsState state;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// Residual after each sweep over the bonds.
  std::vector<double> history;
};

/// max over bonds of ||rho_0 - diag(lambda^2)||_F + ||rho_1 - diag(lambda^2)||_F
/// where rho_k is the trace-normalized one-bond mean-field operator seen from end k.
double superorthogonality_residual(const IPepsState& s);

/// Bond-by-bond gauge fixing until the residual drops below tol. Only gauge
/// transformations are applied; null directions of the bond environments are
/// dropped, which can only lower the bond dimension.
Superorthogonalization superorthogonalize(const IPepsState& s, const SuperorthoOptions& options = {});

/// W on every site of a one-site cell, with W's virtual legs fused into the
/// bonds along `mpo.axis`. Bond dimension along that axis becomes D * D_w.
IPepsState absorb_axis_mpo(const IPepsState& s, const Mpo& mpo);

/// Keeps the largest `d_max` weights of every bond; returns the discarded weight.
double truncate_bonds(IPepsState& s, std::size_t d_max);

struct MpoApplication {
  IPepsState state;
  double discarded_weight = 0.0;
  /// Bond dimension along the axis right after absorbing W.
  std::size_t enlarged_dim = 0;
  Superorthogonalization gauge;
};

MpoApplication apply_axis_mpo(const IPepsState& s, const Mpo& mpo, std::size_t d_max,
                              const SuperorthoOptions& options = {});

/// Mean-field expectation per unit cell. Terms must live on one site or on a
/// nearest-neighbour pair. Dangling bonds carry lambda, the bond inside a
/// pair carries lambda once (sqrt(lambda) from each side).
double expectation_terms_peps(const IPepsState& s, const OperatorTerms& terms);

enum class PepsScheme { Gates, Mpo };

const char* to_string(PepsScheme scheme);

struct PepsSchedule {
  double dtau = 0.2;
  double tau_max = 40.0;
  std::size_t measure_every = 1;
  PepsScheme scheme = PepsScheme::Mpo;
  std::uint64_t seed = 1;
  double rel_tol = 1e-12;
  SuperorthoOptions so;
  /// Gates scheme: superorthogonalize every this many steps (0 = never).
  std::size_t so_every = 10;
};

struct EvolutionPeps {
  GapTrace trace;
  IPepsState final_state;
  double max_discarded_weight = 0.0;
  std::size_t steps = 0;
  /// Superorthogonalization calls that hit max_iter.
  std::size_t so_unconverged = 0;
};

EvolutionPeps run_evolution_peps(const Model& model, const PepsSchedule& schedule,
                                 std::size_t d_max);

/// Gate h_b for the checkerboard scheme: bond term plus field / z on each end.
RMatrix checkerboard_bond_hamiltonian(const Model& model, int axis);

/// Hamiltonian-MPO blocks for the line along `axis` with the field split 1/d.
MpoBlocks axis_line_blocks(const Model& model, int axis);

}  // namespace gapscan
