#include <gtest/gtest.h>

#include <cmath>

#include "gapscan/error.hpp"
#include "gapscan/gap_estimator.hpp"
#include "gapscan/imps.hpp"
#include "gapscan/linalg.hpp"
#include "oracles.hpp"

using gapscan::IMpsState;
using gapscan::RealTensor;
using gapscan::Sublattice;
using oracle::RMat;

namespace {

// Site matrices M^s = Gamma(:, s, :) diag(lambda_right).
std::vector<RMat> site_matrices(const IMpsState& st, Sublattice t) {
  const RealTensor& g = st.gamma(t);
  const auto& lam = st.lambda(t).values;
  std::vector<RMat> out;
  for (std::size_t s = 0; s < g.dim("p"); ++s) {
    RMat m(g.dim("l"), g.dim("r"));
    for (std::size_t a = 0; a < g.dim("l"); ++a)
      for (std::size_t b = 0; b < g.dim("r"); ++b) m(a, b) = g.at({a, s, b}) * lam[b];
    out.push_back(m);
  }
  return out;
}

// Products over every physical string of `k` consecutive sites starting at
// `start`, first site most significant.
std::vector<RMat> strings(const IMpsState& st, Sublattice start, std::size_t k) {
  const auto ma = site_matrices(st, Sublattice::A), mb = site_matrices(st, Sublattice::B);
  std::vector<RMat> cur{RMat::Identity(st.gamma(start).dim("l"), st.gamma(start).dim("l"))};
  for (std::size_t i = 0; i < k; ++i) {
    const bool is_a = (start == Sublattice::A) == (i % 2 == 0);
    const auto& m = is_a ? ma : mb;
    std::vector<RMat> next;
    for (const auto& c : cur)
      for (const auto& ms : m) next.push_back(c * ms);
    cur = std::move(next);
  }
  return cur;
}

// Power iteration for the dominant left and right fixed points of the
// two-site cell starting at `start`; no canonical form is assumed.
std::pair<RMat, RMat> fixed_points(const IMpsState& st, Sublattice start) {
  const auto cell = strings(st, start, 2);
  const auto n = cell.front().rows();
  RMat l = RMat::Identity(n, n), r = RMat::Identity(n, n);
  for (int it = 0; it < 5000; ++it) {
    RMat nl = RMat::Zero(n, n), nr = RMat::Zero(n, n);
    for (const auto& p : cell) {
      nl += p.transpose() * l * p;
      nr += p * r * p.transpose();
    }
    nl /= nl.norm();
    nr /= nr.norm();
    const double change = (nl - l).norm() + (nr - r).norm();
    l = nl;
    r = nr;
    if (change < 1e-15) break;
  }
  return {l, r};
}

// <O> for a dense operator on k contiguous sites starting at `start`.
double oracle_expectation(const IMpsState& st, const RMat& op, std::size_t k, Sublattice start) {
  const auto [l, r] = fixed_points(st, start);
  const std::size_t padded = 2 * ((k + 1) / 2);
  const auto p = strings(st, start, padded);
  const std::size_t d = st.local_dim();
  std::size_t tail = 1;
  for (std::size_t i = k; i < padded; ++i) tail *= d;
  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    den += (p[s].transpose() * l * p[s] * r.transpose()).trace();
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (s % tail != t % tail) continue;
      const double o = op(static_cast<Eigen::Index>(t / tail), static_cast<Eigen::Index>(s / tail));
      if (o != 0.0) num += o * (p[s].transpose() * l * p[t] * r.transpose()).trace();
    }
  }
  return num / den;
}

gapscan::OperatorTerms one_term(const RMat& m, std::size_t k) {
  gapscan::OperatorTerms t;
  t.local_dim = static_cast<int>(std::lround(std::pow(static_cast<double>(m.rows()), 1.0 / static_cast<double>(k))));
  std::vector<gapscan::Site> sites;
  for (std::size_t i = 0; i < k; ++i) sites.push_back({static_cast<int>(i), 0, 0});
  t.terms.push_back({sites, m.cast<gapscan::Complex>()});
  return t;
}

// An entangled, non-canonical state: random product plus a few random gates.
IMpsState scrambled_state(std::uint64_t seed, int d, std::size_t d_max) {
  oracle::Gen gen(seed);
  IMpsState s = gapscan::random_product_imps(d, seed);
  for (int k = 0; k < 6; ++k) {
    const RMat g = oracle::taylor_expm(RMat(-0.6 * gen.symmetric(d * d)));
    s = gapscan::tebd_step(s, g, k % 2 == 0 ? Sublattice::A : Sublattice::B, d_max).state;
  }
  return s;
}

RMat aklt_heisenberg() {
  using oracle::kron2;
  return (kron2(oracle::s1x(), oracle::s1x()) + kron2(oracle::s1y(), oracle::s1y()) +
          kron2(oracle::s1z(), oracle::s1z()))
      .real();
}

}  // namespace

TEST(Imps, ProductStatesAreSeeded) {
  const IMpsState a = gapscan::random_product_imps(3, 11), b = gapscan::random_product_imps(3, 11);
  const IMpsState c = gapscan::random_product_imps(3, 12);
  ASSERT_EQ(a.bond_dimension(), 1u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.gamma_a.data()[i], b.gamma_a.data()[i]);
    EXPECT_EQ(a.gamma_b.data()[i], b.gamma_b.data()[i]);
  }
  EXPECT_NE(a.gamma_a.data()[0], c.gamma_a.data()[0]);
  EXPECT_NEAR(a.gamma_a.norm(), 1.0, 1e-15);
  EXPECT_NE(a.gamma_a.data()[0], a.gamma_b.data()[0]);
  EXPECT_THROW(gapscan::random_product_imps(1, 0), gapscan::InputError);
}

TEST(Imps, StepErrors) {
  const IMpsState s = gapscan::random_product_imps(2, 1);
  EXPECT_THROW(gapscan::tebd_step(s, RMat::Identity(3, 3), Sublattice::A, 4), gapscan::ShapeError);
  EXPECT_THROW(gapscan::tebd_step(s, RMat::Identity(4, 4), Sublattice::A, 0), gapscan::InputError);
  EXPECT_THROW(gapscan::tebd_step(s, RMat::Zero(4, 4), Sublattice::A, 4), gapscan::NumericError);
  EXPECT_THROW(gapscan::expectation_terms_imps(s, one_term(RMat::Identity(32, 32), 5)), gapscan::InputError);
  gapscan::OperatorTerms off_axis = one_term(RMat::Identity(4, 4), 2);
  off_axis.terms[0].sites[1] = {0, 1, 0};
  EXPECT_THROW(gapscan::expectation_terms_imps(s, off_axis), gapscan::InputError);
}

TEST(Imps, CanonicalizeRestoresVidalForm) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int d = seed % 2 == 0 ? 2 : 3;
    const IMpsState raw = scrambled_state(300 + seed, d, 4);
    const auto canon = gapscan::canonicalize(raw);
    EXPECT_LT(gapscan::canonical_residual(canon.state), 1e-11) << "seed " << seed;
    canon.state.lambda_a.validate();
    canon.state.lambda_b.validate();
    EXPECT_NEAR(canon.state.lambda_a.norm(), 1.0, 1e-12);
    // A second pass has nothing left to change.
    EXPECT_LT(gapscan::canonicalize(canon.state).lambda_change, 1e-10) << "seed " << seed;
  }
}

TEST(Imps, ExpectationsMatchTransferMatrixOracle) {
  // The oracle works on the raw (non-canonical) state, so agreement also
  // checks that canonicalization is a pure gauge change.
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    oracle::Gen gen(400 + seed);
    const int d = seed % 2 == 0 ? 2 : 3;
    const IMpsState raw = scrambled_state(400 + seed, d, 4);
    const IMpsState canon = gapscan::canonicalize(raw).state;
    for (std::size_t k = 1; k <= 3; ++k) {
      const auto n = static_cast<Eigen::Index>(std::pow(d, static_cast<double>(k)) + 0.5);
      const RMat op = gen.symmetric(n);
      for (Sublattice anchor : {Sublattice::A, Sublattice::B}) {
        const double want = oracle_expectation(raw, op, k, anchor);
        const double got = gapscan::expectation_terms_imps_at(canon, one_term(op, k), anchor);
        EXPECT_NEAR(got, want, 1e-9 * (1.0 + std::abs(want))) << "seed " << seed << " k " << k;
      }
    }
  }
}

TEST(Imps, IdentityGateChangesNothing) {
  const IMpsState s = gapscan::canonicalize(scrambled_state(500, 2, 4)).state;
  const auto step = gapscan::tebd_step(s, RMat::Identity(4, 4), Sublattice::A, 16);
  ASSERT_EQ(step.state.lambda_a.size(), s.lambda_a.size());
  for (std::size_t i = 0; i < s.lambda_a.size(); ++i) EXPECT_NEAR(step.state.lambda_a.values[i], s.lambda_a.values[i], 1e-12);
  EXPECT_NEAR(step.discarded_weight, 0.0, 1e-14);
  const RMat zz = oracle::kron2(oracle::sz(), oracle::sz()).real();
  EXPECT_NEAR(gapscan::expectation_terms_imps(step.state, one_term(zz, 2)),
              gapscan::expectation_terms_imps(s, one_term(zz, 2)), 1e-12);
}

TEST(Imps, GatesComposeOnOneBond) {
  oracle::Gen gen(600);
  const IMpsState s = gapscan::canonicalize(scrambled_state(600, 2, 4)).state;
  const RMat h = gen.symmetric(4);
  const RMat ga = oracle::taylor_expm(RMat(-0.3 * h)), gb = oracle::taylor_expm(RMat(-0.5 * h));
  const RMat gab = oracle::taylor_expm(RMat(-0.8 * h));
  const auto twice = gapscan::tebd_step(gapscan::tebd_step(s, ga, Sublattice::A, 64).state, gb, Sublattice::A, 64);
  const auto once = gapscan::tebd_step(s, gab, Sublattice::A, 64);
  ASSERT_EQ(twice.state.lambda_a.size(), once.state.lambda_a.size());
  for (std::size_t i = 0; i < once.state.lambda_a.size(); ++i) {
    EXPECT_NEAR(twice.state.lambda_a.values[i], once.state.lambda_a.values[i], 1e-10);
  }
}

TEST(Imps, TruncationReportsDiscardedWeight) {
  const IMpsState s = gapscan::random_product_imps(2, 3);
  oracle::Gen gen(3);
  const RMat g = oracle::taylor_expm(RMat(-1.0 * gen.symmetric(4)));
  const auto full = gapscan::tebd_step(s, g, Sublattice::A, 4);
  const auto cut = gapscan::tebd_step(s, g, Sublattice::A, 1);
  ASSERT_EQ(full.state.lambda_a.size(), 2u);
  EXPECT_EQ(cut.state.lambda_a.size(), 1u);
  const double s1 = full.state.lambda_a.values[1];
  EXPECT_NEAR(cut.discarded_weight, s1 * s1, 1e-12);
}

TEST(Imps, AkltStateIsExact) {
  // AKLT: A+ = sqrt(2/3) s+, A0 = -sqrt(1/3) sz, A- = -sqrt(2/3) s-, lambda = (1, 1)/sqrt 2.
  IMpsState s;
  std::vector<double> g(2 * 3 * 2, 0.0);
  auto set = [&](std::size_t l, std::size_t p, std::size_t r, double v) { g[(l * 3 + p) * 2 + r] = v * std::sqrt(2.0); };
  set(0, 0, 1, std::sqrt(2.0 / 3.0));
  set(0, 1, 0, -std::sqrt(1.0 / 3.0));
  set(1, 1, 1, std::sqrt(1.0 / 3.0));
  set(1, 2, 0, -std::sqrt(2.0 / 3.0));
  const std::vector<gapscan::Index> shape{{"l", 2}, {"p", 3}, {"r", 2}};
  s.gamma_a = RealTensor(shape, g);
  s.gamma_b = s.gamma_a;
  s.lambda_a = {"ab", {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}};
  s.lambda_b = {"ba", {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}};
  EXPECT_LT(gapscan::canonical_residual(s), 1e-14);
  EXPECT_NEAR(gapscan::expectation_terms_imps_at(s, one_term(aklt_heisenberg(), 2), Sublattice::A), -4.0 / 3.0, 1e-13);
  EXPECT_NEAR(oracle_expectation(s, aklt_heisenberg(), 2, Sublattice::A), -4.0 / 3.0, 1e-13);
  // Already canonical, so the fixed-point gauge is the identity.
  const auto canon = gapscan::canonicalize(s);
  EXPECT_LT(canon.lambda_change, 1e-12);
}

TEST(Imps, BondHamiltonianSplitsFieldInHalf) {
  const auto m = gapscan::make_tfim_model(1, 0.3, 0.8);
  const RMat hb = gapscan::bond_hamiltonian_1d(m.hamiltonian);
  using oracle::kron2;
  const oracle::CMat id = oracle::CMat::Identity(2, 2);
  const RMat want = (-0.3 * kron2(oracle::sz(), oracle::sz()) - 0.4 * (kron2(oracle::sx(), id) + kron2(id, oracle::sx()))).real();
  EXPECT_LT((hb - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Imps, FieldOnlyChainRelaxesToPlusX) {
  const auto m = gapscan::make_tfim_model(1, 0.0, 1.0);
  gapscan::Schedule1D sch;
  sch.dtau = 0.05;
  sch.tau_max = 12.0;
  const auto evo = gapscan::run_evolution_1d(m, sch, 4, 5);
  EXPECT_EQ(evo.final_state.bond_dimension(), 1u);
  const RMat x = oracle::sx().real();
  EXPECT_NEAR(gapscan::expectation_terms_imps(evo.final_state, one_term(x, 1)), 2.0, 1e-9);
}

TEST(Imps, ChainGapMatchesFreeFermions) {
  const double J = 0.3, g = 1.0;
  const auto m = gapscan::make_tfim_model(1, J, g);
  gapscan::Schedule1D sch;
  sch.dtau = 0.05;
  sch.tau_max = 20.0;
  const auto evo = gapscan::run_evolution_1d(m, sch, 16, 1);
  const auto est = gapscan::estimate_gap(evo.trace);
  const double want = oracle::tfim_chain_gap(J, g);
  EXPECT_NEAR(want, 1.4, 1e-9);
  EXPECT_NEAR(est.gap, want, 0.01 * want);
  EXPECT_EQ(est.quality, gapscan::GapQuality::Clean);
}

TEST(Imps, SeededRunsAreBitIdentical) {
  const auto m = gapscan::make_tfim_model(1, 0.5, 1.0);
  gapscan::Schedule1D sch;
  sch.tau_max = 3.0;
  const auto a = gapscan::run_evolution_1d(m, sch, 8, 9), b = gapscan::run_evolution_1d(m, sch, 8, 9);
  ASSERT_EQ(a.trace.samples.size(), b.trace.samples.size());
  for (std::size_t i = 0; i < a.trace.samples.size(); ++i) {
    EXPECT_EQ(a.trace.samples[i].value, b.trace.samples[i].value);
  }
  EXPECT_EQ(a.trace.metadata.scheme, "tebd");
  EXPECT_EQ(a.trace.metadata.seed, 9u);
}

TEST(Imps, ScheduleValidation) {
  const auto m = gapscan::make_tfim_model(1, 0.5, 1.0);
  gapscan::Schedule1D bad;
  bad.dtau = 0.0;
  EXPECT_THROW(gapscan::run_evolution_1d(m, bad, 4, 1), gapscan::InputError);
  bad.dtau = 0.1;
  bad.measure_every = 0;
  EXPECT_THROW(gapscan::run_evolution_1d(m, bad, 4, 1), gapscan::InputError);
  EXPECT_THROW(gapscan::run_evolution_1d(gapscan::make_tfim_model(2, 0.5, 1.0), gapscan::Schedule1D{}, 4, 1),
               gapscan::InputError);
}
