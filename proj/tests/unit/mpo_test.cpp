#include <gtest/gtest.h>

#include "gapscan/error.hpp"
#include "gapscan/mpo.hpp"
#include "oracles.hpp"

using oracle::CMat;
using oracle::RMat;

namespace {

// Open n-site TFIM line -J sum Z Z - g sum X, site 0 most significant.
RMat tfim_line(std::size_t n, double J, double g) {
  CMat h = CMat::Zero(1 << n, 1 << n);
  for (std::size_t i = 0; i + 1 < n; ++i) h -= J * oracle::on_sites({oracle::sz(), oracle::sz()}, {i, i + 1}, n, 2);
  for (std::size_t i = 0; i < n; ++i) h -= g * oracle::on_sites({oracle::sx()}, {i}, n, 2);
  return h.real();
}

gapscan::MpoBlocks tfim_blocks(double J, double g) {
  const RMat zz = oracle::kron2(oracle::sz(), oracle::sz()).real();
  return gapscan::hamiltonian_line_mpo(-J * zz, -g * oracle::sx().real(), 1.0);
}

double wii_error(double J, double g, double dtau, std::size_t n) {
  const gapscan::Mpo mpo = gapscan::build_wii(tfim_blocks(J, g), dtau);
  const RMat line = gapscan::contract_line(mpo.w, n, 0, 0);
  return (line - oracle::taylor_expm(RMat(-dtau * tfim_line(n, J, g)))).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Mpo, HamiltonianBlocksReproduceTheLine) {
  const auto blocks = tfim_blocks(0.7, 1.3);
  EXPECT_EQ(blocks.channels(), 1u);
  for (std::size_t n : {2u, 3u, 4u}) {
    const RMat want = tfim_line(n, 0.7, 1.3);
    EXPECT_LT((gapscan::dense_line_hamiltonian(blocks, n) - want).cwiseAbs().maxCoeff(), 1e-12);
    const gapscan::RealTensor w = gapscan::hamiltonian_mpo_tensor(blocks);
    const std::size_t last = w.dim("wl") - 1;
    EXPECT_LT((gapscan::contract_line(w, n, 0, last) - want).cwiseAbs().maxCoeff(), 1e-12) << n;
  }
}

TEST(Mpo, OperatorSvdHandlesGenericBondTerms) {
  oracle::Gen gen(9);
  const RMat bond = gen.symmetric(4), field = gen.symmetric(2);
  const auto blocks = gapscan::hamiltonian_line_mpo(bond, field, 0.5);
  RMat want = RMat::Zero(8, 8);
  const RMat id = RMat::Identity(2, 2);
  want += oracle::kron2(bond.cast<oracle::cd>(), id.cast<oracle::cd>()).real();
  want += oracle::kron2(id.cast<oracle::cd>(), bond.cast<oracle::cd>()).real();
  for (std::size_t i = 0; i < 3; ++i) want += 0.5 * oracle::on_sites({field.cast<oracle::cd>()}, {i}, 3, 2).real();
  EXPECT_LT((gapscan::dense_line_hamiltonian(blocks, 3) - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(blocks.channels(), 4u);
}

TEST(Mpo, WiiHasThreeChannelsForIsing) {
  const gapscan::Mpo mpo = gapscan::build_wii(tfim_blocks(0.2, 1.0), 0.1, 1);
  EXPECT_EQ(mpo.virtual_dim, 3u);
  EXPECT_EQ(mpo.w.dim("wl"), 3u);
  EXPECT_EQ(mpo.axis, 1);
  EXPECT_EQ(mpo.local_dim(), 2);
}

TEST(Mpo, WiiIsExactWithoutBondOrWithoutField) {
  for (double dtau : {0.05, 0.2}) {
    EXPECT_LT(wii_error(0.0, 1.1, dtau, 4), 1e-12) << dtau;
    EXPECT_LT(wii_error(0.9, 0.0, dtau, 4), 1e-12) << dtau;
  }
  EXPECT_EQ(gapscan::build_wii(tfim_blocks(0.0, 1.0), 0.1).virtual_dim, 1u);
}

TEST(Mpo, WiiErrorIsSecondOrderPerStep) {
  const double e1 = wii_error(0.5, 1.0, 0.1, 4);
  const double e2 = wii_error(0.5, 1.0, 0.05, 4);
  EXPECT_GT(e1, 0.0);
  EXPECT_GE(e1 / e2, 3.6);
}

TEST(Mpo, WiiKeepsSpinFlipSymmetry) {
  const gapscan::Mpo mpo = gapscan::build_wii(tfim_blocks(0.4, 0.9), 0.2);
  const RMat line = gapscan::contract_line(mpo.w, 4, 0, 0);
  const CMat flip = oracle::on_sites({oracle::sx(), oracle::sx(), oracle::sx(), oracle::sx()}, {0, 1, 2, 3}, 4, 2);
  const RMat p = flip.real();
  EXPECT_LT((p * line * p - line).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Mpo, IdentityMpo) {
  const gapscan::Mpo id = gapscan::identity_mpo(3, 2);
  EXPECT_EQ(id.virtual_dim, 1u);
  EXPECT_LT((gapscan::contract_line(id.w, 2, 0, 0) - RMat::Identity(9, 9)).cwiseAbs().maxCoeff(), 0.0 + 1e-15);
}

TEST(Mpo, InputErrors) {
  const RMat zz = oracle::kron2(oracle::sz(), oracle::sz()).real();
  const RMat x = oracle::sx().real();
  EXPECT_THROW(gapscan::hamiltonian_line_mpo(zz, x, 0.0), gapscan::InputError);
  EXPECT_THROW(gapscan::hamiltonian_line_mpo(zz, x, 1.5), gapscan::InputError);
  EXPECT_THROW(gapscan::hamiltonian_line_mpo(RMat::Identity(3, 3), x, 1.0), gapscan::ShapeError);
  EXPECT_THROW(gapscan::hamiltonian_line_mpo(zz, RMat::Identity(2, 3), 1.0), gapscan::ShapeError);
  const auto blocks = tfim_blocks(1.0, 1.0);
  EXPECT_THROW(gapscan::build_wii(blocks, 0.0), gapscan::InputError);
  EXPECT_THROW(gapscan::build_wii(blocks, -0.1), gapscan::InputError);
  auto longer = blocks;
  longer.a = {{RMat::Identity(2, 2)}};
  EXPECT_THROW(gapscan::build_wii(longer, 0.1), gapscan::InputError);
  EXPECT_THROW(gapscan::contract_line(gapscan::build_wii(blocks, 0.1).w, 0, 0, 0), gapscan::InputError);
}
