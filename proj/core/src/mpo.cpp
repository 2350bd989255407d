#include "gapscan/mpo.hpp"

#include <cmath>

#include "gapscan/error.hpp"

namespace gapscan {

namespace {

// R[(q1 p1), (q2 p2)] = m[(q1 q2), (p1 p2)]: turns an operator into a matrix
// whose SVD gives its operator-Schmidt decomposition.
RMatrix realign(const RMatrix& m, Eigen::Index d) {
  RMatrix r(d * d, d * d);
  for (Eigen::Index q1 = 0; q1 < d; ++q1)
    for (Eigen::Index q2 = 0; q2 < d; ++q2)
      for (Eigen::Index p1 = 0; p1 < d; ++p1)
        for (Eigen::Index p2 = 0; p2 < d; ++p2) r(q1 * d + p1, q2 * d + p2) = m(q1 * d + q2, p1 * d + p2);
  return r;
}

RMatrix unvec(const RVector& v, Eigen::Index d) {
  RMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v(i * d + j);
  return m;
}

void operator_schmidt(const RMatrix& m, Eigen::Index d, std::vector<RMatrix>& left,
                      std::vector<RMatrix>& right) {
  left.clear();
  right.clear();
  Eigen::BDCSVD<RMatrix> svd(realign(m, d), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return;
  for (Eigen::Index a = 0; a < s.size(); ++a) {
    if (s(a) <= 1e-13 * s(0)) break;
    const double w = std::sqrt(s(a));
    left.push_back(w * unvec(svd.matrixU().col(a), d));
    right.push_back(w * unvec(svd.matrixV().col(a), d));
  }
}

RMatrix kron_sum_line(const std::vector<RMatrix>& c, const std::vector<RMatrix>& b, Eigen::Index d) {
  RMatrix out = RMatrix::Zero(d * d, d * d);
  for (std::size_t a = 0; a < c.size(); ++a) out += kron(c[a], b[a]);
  return out;
}

void put_block(RealTensor& w, std::size_t l, std::size_t r, const RMatrix& op) {
  // op(out, in) stored at W[l, r, in, out]
  const std::size_t d = w.dim("in");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t o = 0; o < d; ++o)
      w.at({l, r, i, o}) = op(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
}

}  // namespace

MpoBlocks hamiltonian_line_mpo(const RMatrix& bond_term, const RMatrix& field_term,
                               double field_fraction) {
  if (field_term.rows() != field_term.cols() || field_term.rows() == 0) {
    throw ShapeError("field term must be a square single-site operator");
  }
  const Eigen::Index d = field_term.rows();
  if (bond_term.rows() != d * d || bond_term.cols() != d * d) {
    throw ShapeError("bond term must act on two sites");
  }
  if (!(field_fraction > 0.0 && field_fraction <= 1.0)) {
    throw InputError("field_fraction must lie in (0, 1]");
  }
  MpoBlocks blocks;
  blocks.local_dim = static_cast<int>(d);
  blocks.d = field_fraction * field_term;
  operator_schmidt(bond_term, d, blocks.c, blocks.b);
  const std::size_t n = blocks.channels();
  blocks.a.assign(n, std::vector<RMatrix>(n, RMatrix::Zero(d, d)));
  // Reassembling must reproduce the bond; anything else is not a sum of products.
  if ((kron_sum_line(blocks.c, blocks.b, d) - bond_term).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, bond_term.cwiseAbs().maxCoeff())) {
    throw InputError("bond term does not factorize into single-site products");
  }
  return blocks;
}

RealTensor hamiltonian_mpo_tensor(const MpoBlocks& blocks) {
  const std::size_t n = blocks.channels();
  const auto d = static_cast<std::size_t>(blocks.local_dim);
  RealTensor w({{"wl", n + 2}, {"wr", n + 2}, {"in", d}, {"out", d}});
  const RMatrix id = RMatrix::Identity(blocks.local_dim, blocks.local_dim);
  put_block(w, 0, 0, id);
  put_block(w, n + 1, n + 1, id);
  put_block(w, 0, n + 1, blocks.d);
  for (std::size_t a = 0; a < n; ++a) {
    put_block(w, 0, a + 1, blocks.c[a]);
    put_block(w, a + 1, n + 1, blocks.b[a]);
    for (std::size_t b = 0; b < n; ++b) put_block(w, a + 1, b + 1, blocks.a[a][b]);
  }
  return w;
}

Mpo build_wii(const MpoBlocks& blocks, double dtau, int axis) {
  if (!(dtau > 0.0)) throw InputError("dtau must be positive");
  const Eigen::Index d = blocks.local_dim;
  for (const auto& row : blocks.a) {
    for (const auto& m : row) {
      if (m.cwiseAbs().maxCoeff() > 0.0) throw InputError("WII here handles nearest-neighbour lines only");
    }
  }

  // Channels of exp(-dtau h) - 1, with h the full bond operator.
  std::vector<RMatrix> c, b;
  if (blocks.channels() > 0) {
    const RMatrix h = kron_sum_line(blocks.c, blocks.b, d);
    RMatrix e = expm_general(-dtau * h);
    e -= RMatrix::Identity(d * d, d * d);
    operator_schmidt(e, d, c, b);
  }
  const std::size_t n = c.size();
  const RMatrix td = -dtau * blocks.d;

  Mpo mpo;
  mpo.dtau = dtau;
  mpo.axis = axis;
  mpo.virtual_dim = n + 1;
  mpo.w = RealTensor({{"wl", n + 1}, {"wr", n + 1}, {"in", static_cast<std::size_t>(d)},
                      {"out", static_cast<std::size_t>(d)}});

  put_block(mpo.w, 0, 0, expm_general(td));
  // Two-by-two auxiliary space: block (1, 0) of exp([[tD, 0], [X, tD]]).
  auto single = [&](const RMatrix& x) {
    RMatrix big = RMatrix::Zero(2 * d, 2 * d);
    big.topLeftCorner(d, d) = td;
    big.bottomRightCorner(d, d) = td;
    big.bottomLeftCorner(d, d) = x;
    return RMatrix(expm_general(big).bottomLeftCorner(d, d));
  };
  for (std::size_t k = 0; k < n; ++k) {
    put_block(mpo.w, 0, k + 1, single(c[k]));
    put_block(mpo.w, k + 1, 0, single(b[k]));
  }
  // Four-dimensional auxiliary space |x y>, x for B (incoming), y for C (outgoing):
  // the <11| exp(tD + B sigma+_x + C sigma+_y) |00> block.
  for (std::size_t ka = 0; ka < n; ++ka) {
    for (std::size_t kb = 0; kb < n; ++kb) {
      RMatrix big = RMatrix::Zero(4 * d, 4 * d);
      for (Eigen::Index s = 0; s < 4; ++s) big.block(s * d, s * d, d, d) = td;
      // aux states: 0 = |00>, 1 = |01>, 2 = |10>, 3 = |11>
      big.block(2 * d, 0, d, d) = b[ka];
      big.block(3 * d, 1 * d, d, d) = b[ka];
      big.block(1 * d, 0, d, d) = c[kb];
      big.block(3 * d, 2 * d, d, d) = c[kb];
      put_block(mpo.w, ka + 1, kb + 1, RMatrix(expm_general(big).block(3 * d, 0, d, d)));
    }
  }
  mpo.w.require_finite("build_wii");
  return mpo;
}

Mpo identity_mpo(int local_dim, int axis) {
  Mpo mpo;
  mpo.axis = axis;
  mpo.virtual_dim = 1;
  const auto d = static_cast<std::size_t>(local_dim);
  mpo.w = RealTensor({{"wl", 1}, {"wr", 1}, {"in", d}, {"out", d}});
  put_block(mpo.w, 0, 0, RMatrix::Identity(local_dim, local_dim));
  return mpo;
}

RMatrix contract_line(const RealTensor& w, std::size_t n, std::size_t left, std::size_t right) {
  if (n == 0) throw InputError("line needs at least one site");
  const std::size_t dw = w.dim("wl");
  const auto d = static_cast<Eigen::Index>(w.dim("in"));
  auto block = [&](std::size_t l, std::size_t r) {
    RMatrix op(d, d);
    for (Eigen::Index o = 0; o < d; ++o)
      for (Eigen::Index i = 0; i < d; ++i)
        op(o, i) = w.at({l, r, static_cast<std::size_t>(i), static_cast<std::size_t>(o)});
    return op;
  };
  // acc[k] = operator on the sites so far, with the virtual index at k.
  std::vector<RMatrix> acc(dw);
  for (std::size_t k = 0; k < dw; ++k) acc[k] = block(left, k);
  for (std::size_t site = 1; site < n; ++site) {
    std::vector<RMatrix> next(dw);
    for (std::size_t k = 0; k < dw; ++k) {
      next[k] = RMatrix::Zero(acc[0].rows() * d, acc[0].cols() * d);
      for (std::size_t j = 0; j < dw; ++j) {
        const RMatrix bj = block(j, k);
        if (bj.cwiseAbs().maxCoeff() == 0.0) continue;
        next[k] += kron(acc[j], bj);
      }
    }
    acc = std::move(next);
  }
  return acc.at(right);
}

RMatrix dense_line_hamiltonian(const MpoBlocks& blocks, std::size_t n) {
  const Eigen::Index d = blocks.local_dim;
  auto embed = [&](const RMatrix& op, std::size_t pos, std::size_t width) {
    const auto left = static_cast<Eigen::Index>(std::pow(d, static_cast<double>(pos)));
    const auto right = static_cast<Eigen::Index>(std::pow(d, static_cast<double>(n - pos - width)));
    return RMatrix(kron(kron(RMatrix::Identity(left, left), op), RMatrix::Identity(right, right)));
  };
  const RMatrix bond = kron_sum_line(blocks.c, blocks.b, d);
  const auto dim = static_cast<Eigen::Index>(std::pow(d, static_cast<double>(n)));
  RMatrix h = RMatrix::Zero(dim, dim);
  for (std::size_t x = 0; x < n; ++x) h += embed(blocks.d, x, 1);
  if (blocks.channels() > 0) {
    for (std::size_t x = 0; x + 1 < n; ++x) h += embed(bond, x, 2);
  }
  return h;
}

}  // namespace gapscan
