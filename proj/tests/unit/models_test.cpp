#include <gtest/gtest.h>

#include "gapscan/error.hpp"
#include "gapscan/models.hpp"
#include "oracles.hpp"

using gapscan::Cluster;
using gapscan::Complex;
using oracle::CMat;

namespace {

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

Cluster periodic(int dim, int L) {
  Cluster c;
  c.dimension = dim;
  c.extent = {L, dim >= 2 ? L : 1, dim >= 3 ? L : 1};
  c.periodic = true;
  return c;
}

}  // namespace

TEST(Models, SpinMatricesMatchHandWritten) {
  EXPECT_LT(max_abs(gapscan::spin::pauli_y() - oracle::sy()), 1e-15);
  EXPECT_LT(max_abs(gapscan::spin::spin1_y() - oracle::s1y()), 1e-15);
  const CMat x = gapscan::spin::spin1_x(), y = gapscan::spin::spin1_y(), z = gapscan::spin::spin1_z();
  EXPECT_LT(max_abs(x * y - y * x - Complex(0, 1) * z), 1e-15);
  EXPECT_LT(max_abs(x * x + y * y + z * z - 2.0 * CMat::Identity(3, 3)), 1e-15);
}

TEST(Models, TfimTermsReproduceDenseClusters) {
  struct Case { int dim; int L; };
  for (const Case c : {Case{1, 6}, Case{2, 3}, Case{3, 2}}) {
    const auto [lat, h] = gapscan::tfim(c.dim, 0.37, 1.1);
    EXPECT_EQ(lat.connectivity, 2 * c.dim);
    const Cluster cl = periodic(c.dim, c.L);
    const CMat want = oracle::tfim_cluster(c.dim, static_cast<std::size_t>(c.L), 0.37, 1.1);
    EXPECT_LT(max_abs(gapscan::dense_operator(h, cl) - want), 1e-12) << "dim " << c.dim;
  }
}

TEST(Models, TfimCommutatorMatchesDenseCommutator) {
  struct Case { int dim; int L; };
  for (const Case c : {Case{1, 6}, Case{2, 3}, Case{3, 2}}) {
    const auto m = gapscan::make_tfim_model(c.dim, 0.37, 1.1);
    const Cluster cl = periodic(c.dim, c.L);
    const std::size_t n = cl.sites();
    const CMat h = oracle::tfim_cluster(c.dim, static_cast<std::size_t>(c.L), 0.37, 1.1);
    const CMat o = oracle::y_sum(n);
    const CMat want = Complex(0, 1) * (h * o - o * h);
    EXPECT_LT(max_abs(gapscan::dense_operator(m.commutator, cl) - want), 1e-12) << "dim " << c.dim;
    EXPECT_TRUE(m.commutator.hermitian);
    for (const auto& t : m.commutator.terms) EXPECT_LT(t.matrix.imag().cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Models, HaldaneCommutatorMatchesDenseCommutator) {
  const auto m = gapscan::make_haldane_model();
  EXPECT_EQ(m.hamiltonian.local_dim, 3);
  EXPECT_EQ(m.commutator.max_support(), 3u);
  const Cluster cl = periodic(1, 6);
  const CMat h = oracle::haldane_ring(6);
  const CMat o = oracle::syz_ring(6);
  EXPECT_LT(max_abs(gapscan::dense_operator(m.hamiltonian, cl) - h), 1e-12);
  EXPECT_LT(max_abs(gapscan::dense_operator(m.gap_operator, cl) - o), 1e-12);
  const CMat want = Complex(0, 1) * (h * o - o * h);
  EXPECT_LT(max_abs(gapscan::dense_operator(m.commutator, cl) - want), 1e-12);
}

TEST(Models, RandomTermsCommutatorMatchesDense) {
  // Random Hermitian two-site couplings and one-site observables on a ring.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    oracle::Gen gen(500 + seed);
    gapscan::OperatorTerms h, o;
    h.terms.push_back({{{0, 0, 0}, {1, 0, 0}}, gen.hermitian(4)});
    h.terms.push_back({{{0, 0, 0}}, gen.hermitian(2)});
    o.terms.push_back({{{0, 0, 0}}, gen.hermitian(2)});
    o.terms.push_back({{{0, 0, 0}, {2, 0, 0}}, gen.hermitian(4)});
    const Cluster cl = periodic(1, 7);
    const CMat hd = gapscan::dense_operator(h, cl), od = gapscan::dense_operator(o, cl);
    const CMat want = Complex(0, 1) * (hd * od - od * hd);
    EXPECT_LT(max_abs(gapscan::dense_operator(gapscan::commutator_terms(h, o), cl) - want), 1e-12)
        << "seed " << seed;
  }
}

TEST(Models, OpenClusterSkipsLeavingPlacements) {
  const auto [lat, h] = gapscan::tfim(1, 1.0, 0.0);
  Cluster open = periodic(1, 3);
  open.periodic = false;
  const CMat want = -oracle::on_sites({oracle::sz(), oracle::sz()}, {0, 1}, 3, 2) -
                    oracle::on_sites({oracle::sz(), oracle::sz()}, {1, 2}, 3, 2);
  EXPECT_LT(max_abs(gapscan::dense_operator(h, open) - want), 1e-14);
}

TEST(Models, ValidationErrors) {
  EXPECT_THROW(gapscan::tfim(2, 0.0, 0.0), gapscan::InputError);
  EXPECT_THROW(gapscan::tfim(4, 1.0, 1.0), gapscan::InputError);
  EXPECT_THROW(gapscan::LatticeSpec::hypercubic(0), gapscan::InputError);

  gapscan::OperatorTerms bad;
  bad.terms.push_back({{{0, 0, 0}, {0, 0, 0}}, CMat::Identity(4, 4)});
  EXPECT_THROW(bad.validate(), gapscan::InputError);
  bad.terms = {{{{0, 0, 0}}, CMat::Identity(3, 3)}};
  EXPECT_THROW(bad.validate(), gapscan::InputError);
  CMat nh = CMat::Zero(2, 2);
  nh(0, 1) = 1.0;
  bad.terms = {{{{0, 0, 0}}, nh}};
  EXPECT_THROW(bad.validate(), gapscan::InputError);
  bad.hermitian = false;
  EXPECT_NO_THROW(bad.validate());
  bad.terms = {{{}, CMat::Identity(1, 1)}};
  EXPECT_THROW(bad.validate(), gapscan::InputError);

  gapscan::OperatorTerms spin1;
  spin1.local_dim = 3;
  EXPECT_THROW(gapscan::commutator_terms(gapscan::tfim(1, 1.0, 1.0).second, spin1), gapscan::InputError);

  // A two-site term cannot sit on a ring of one site.
  EXPECT_THROW(gapscan::dense_operator(gapscan::tfim(1, 1.0, 1.0).second, periodic(1, 1)), gapscan::InputError);
  EXPECT_THROW(gapscan::dense_operator(gapscan::tfim(1, 1.0, 1.0).second, periodic(1, 13)), gapscan::InputError);
}

TEST(Models, ConstantsAreMetadata) {
  EXPECT_DOUBLE_EQ(gapscan::ModelConstants::haldane_reference_gap, 0.410479);
  EXPECT_DOUBLE_EQ(gapscan::ModelConstants::tfim2d_critical_g_over_j, 3.04438);
  const auto m = gapscan::make_tfim_model(3, 0.1, 1.0);
  EXPECT_EQ(m.lattice.connectivity, 6);
  EXPECT_EQ(m.name, "tfim3d");
}
