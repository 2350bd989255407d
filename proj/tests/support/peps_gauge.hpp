#pragma once

// Gauge scrambling and local probes for iPEPS property checks.

#include <algorithm>
#include <cmath>
#include <vector>

#include "gapscan/ipeps.hpp"
#include "oracles.hpp"

namespace oracle {

inline gapscan::OperatorTerms site_term(const CMat& m) {
  gapscan::OperatorTerms t;
  t.terms.push_back({{{0, 0, 0}}, m});
  return t;
}

inline gapscan::OperatorTerms pair_term(const CMat& m, int axis) {
  gapscan::OperatorTerms t;
  gapscan::Site e{0, 0, 0};
  e[static_cast<std::size_t>(axis)] = 1;
  t.terms.push_back({{{0, 0, 0}, e}, m});
  return t;
}

// X, Z, and Z Z / X Z along every axis of the lattice.
inline std::vector<double> peps_probes(const gapscan::IPepsState& s) {
  std::vector<gapscan::OperatorTerms> ops{site_term(sx()), site_term(sz())};
  for (int a = 0; a < s.lattice.dimension; ++a) {
    ops.push_back(pair_term(kron2(sz(), sz()), a));
    ops.push_back(pair_term(kron2(sx(), sz()), a));
  }
  std::vector<double> v;
  for (const auto& t : ops) v.push_back(gapscan::expectation_terms_peps(s, t));
  return v;
}

// Inserts X and its compensating inverse on every bond. The state is unchanged
// but the lambda mean field is no longer consistent with it.
inline gapscan::IPepsState scramble_gauge(const gapscan::IPepsState& s, std::uint64_t seed) {
  Gen gen(seed);
  gapscan::IPepsState out = s;
  for (auto& b : out.bonds) {
    const auto n = static_cast<Eigen::Index>(b.lambda.size());
    const RMat x = RMat::Identity(n, n) + 0.3 * gen.real_matrix(n, n);
    Eigen::VectorXd lam(n);
    for (Eigen::Index i = 0; i < n; ++i) lam(i) = b.lambda.values[static_cast<std::size_t>(i)];
    // X diag(lam) Y^T = diag(lam)
    const RMat y = lam.asDiagonal() * RMat(x.inverse().transpose()) * lam.cwiseInverse().asDiagonal();
    out.sites[b.site0] = out.sites[b.site0].transformed(b.leg0, x);
    out.sites[b.site1] = out.sites[b.site1].transformed(b.leg1, y);
  }
  return out;
}

inline double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
