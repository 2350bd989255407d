#include "gapscan/ipeps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "gapscan/error.hpp"

namespace gapscan {

namespace {

int mod2(int x) { return ((x % 2) + 2) % 2; }

std::vector<double> powered(const std::vector<double>& v, double p) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = p == 1.0 ? v[i] : std::pow(v[i], p);
  return out;
}

std::vector<double> floored_inverse(const std::vector<double>& w, std::size_t& floored) {
  const double floor = 1e-12 * (w.empty() ? 1.0 : *std::max_element(w.begin(), w.end()));
  std::vector<double> inv(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > floor) {
      inv[i] = 1.0 / w[i];
    } else {
      inv[i] = 0.0;
      ++floored;
    }
  }
  return inv;
}

std::vector<std::string> virtual_legs(const RealTensor& t) {
  std::vector<std::string> out;
  for (const auto& idx : t.indices()) {
    if (idx.label != "p") out.push_back(idx.label);
  }
  return out;
}

// Site tensor with lambda^power absorbed on every virtual leg not in `skip`.
RealTensor with_env(const IPepsState& s, std::size_t site, const std::vector<std::string>& skip,
                    double power = 1.0) {
  RealTensor t = s.sites[site];
  for (const auto& leg : virtual_legs(t)) {
    if (std::find(skip.begin(), skip.end(), leg) != skip.end()) continue;
    t.scale_along(leg, powered(s.bonds[s.bond_at(site, leg)].lambda.values, power));
  }
  return t;
}

std::vector<std::string> labels_except(const RealTensor& t, const std::vector<std::string>& drop) {
  std::vector<std::string> out;
  for (const auto& idx : t.indices()) {
    if (std::find(drop.begin(), drop.end(), idx.label) == drop.end()) out.push_back(idx.label);
  }
  return out;
}

std::vector<Index> indices_of(const RealTensor& t, const std::vector<std::string>& labels) {
  std::vector<Index> out;
  for (const auto& l : labels) out.push_back(t.index(t.position(l)));
  return out;
}

// One-bond mean-field operator M[b, b'] seen through `leg` of `site`.
RMatrix bond_environment(const IPepsState& s, std::size_t site, const std::string& leg) {
  const RealTensor t = with_env(s, site, {leg});
  const RMatrix m = t.to_matrix(labels_except(t, {leg}), {leg});
  RMatrix env = m.transpose() * m;
  return 0.5 * (env + env.transpose());
}

// M = X X^T on its support: returns (X, X^{-T}) restricted to eigenvalues
// above a relative cutoff.
std::pair<RMatrix, RMatrix> support_factor(const RMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericError("superorthogonalize: eigensolver failed");
  const RVector& w = es.eigenvalues();
  const double wmax = w.cwiseAbs().maxCoeff();
  if (!(wmax > 0.0)) throw NumericError("superorthogonalize: vanishing bond environment");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = w.size() - 1; i >= 0; --i) {
    if (w(i) > 1e-14 * wmax) keep.push_back(i);
  }
  const auto r = static_cast<Eigen::Index>(keep.size());
  RMatrix x(m.rows(), r), x_inv_t(m.rows(), r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double sw = std::sqrt(w(keep[static_cast<std::size_t>(k)]));
    x.col(k) = es.eigenvectors().col(keep[static_cast<std::size_t>(k)]) * sw;
    x_inv_t.col(k) = es.eigenvectors().col(keep[static_cast<std::size_t>(k)]) / sw;
  }
  return {std::move(x), std::move(x_inv_t)};
}

void normalize_sites(IPepsState& s) {
  for (auto& t : s.sites) {
    const double m = t.max_abs();
    if (!(m > 0.0)) throw NumericError("site tensor vanished");
    t *= 1.0 / m;
  }
}

void fix_bond(IPepsState& s, std::size_t b) {
  PepsBond& bond = s.bonds[b];
  const RMatrix m0 = bond_environment(s, bond.site0, bond.leg0);
  const RMatrix m1 = bond_environment(s, bond.site1, bond.leg1);
  const auto [x0, x0_inv_t] = support_factor(m0);
  const auto [x1, x1_inv_t] = support_factor(m1);
  const RVector lam = Eigen::Map<const RVector>(bond.lambda.values.data(),
                                                static_cast<Eigen::Index>(bond.lambda.size()));
  Eigen::BDCSVD<RMatrix> svd(x0.transpose() * lam.asDiagonal() * x1,
                             Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  Eigen::Index k = 0;
  while (k < sv.size() && sv(k) > 1e-13 * sv(0)) ++k;
  if (k == 0) throw NumericError("superorthogonalize: bond weights vanished");
  const RMatrix a0 = x0_inv_t * svd.matrixU().leftCols(k);
  const RMatrix a1 = x1_inv_t * svd.matrixV().leftCols(k);
  s.sites[bond.site0] = s.sites[bond.site0].transformed(bond.leg0, a0);
  s.sites[bond.site1] = s.sites[bond.site1].transformed(bond.leg1, a1);
  bond.lambda.values.assign(sv.data(), sv.data() + k);
  bond.lambda.normalize();
}

double bond_residual(const IPepsState& s, const PepsBond& bond) {
  const RVector lam = Eigen::Map<const RVector>(bond.lambda.values.data(),
                                                static_cast<Eigen::Index>(bond.lambda.size()));
  const RVector target = lam.cwiseAbs2() / lam.squaredNorm();
  double r = 0.0;
  for (int end = 0; end < 2; ++end) {
    const RMatrix m = end == 0 ? bond_environment(s, bond.site0, bond.leg0)
                               : bond_environment(s, bond.site1, bond.leg1);
    RMatrix rho = lam.asDiagonal() * m * lam.asDiagonal();
    rho /= rho.trace();
    rho.diagonal() -= target;
    r += rho.norm();
  }
  return r;
}

RMatrix field_sum(const Model& model) {
  const int d = model.hamiltonian.local_dim;
  RMatrix f = RMatrix::Zero(d, d);
  for (const auto& t : model.hamiltonian.terms) {
    if (t.sites.size() == 1) f += real_matrix(t.matrix);
  }
  return f;
}

RMatrix axis_bond(const Model& model, int axis) {
  const int d = model.hamiltonian.local_dim;
  RMatrix out = RMatrix::Zero(d * d, d * d);
  Site e{0, 0, 0};
  e[static_cast<std::size_t>(axis)] = 1;
  const Site origin{0, 0, 0};
  for (const auto& t : model.hamiltonian.terms) {
    if (t.sites.size() == 1) continue;
    if (t.sites.size() != 2) throw InputError("PEPS evolution needs nearest-neighbour terms");
    const bool forward = t.sites[0] == origin && t.sites[1] == e;
    const bool backward = t.sites[1] == origin && t.sites[0] == e;
    if (!forward && !backward) {
      bool other_axis = false;
      for (int a = 0; a < model.lattice.dimension; ++a) {
        Site ea{0, 0, 0};
        ea[static_cast<std::size_t>(a)] = 1;
        if ((t.sites[0] == origin && t.sites[1] == ea) || (t.sites[1] == origin && t.sites[0] == ea)) {
          other_axis = true;
        }
      }
      if (!other_axis) throw InputError("PEPS evolution needs nearest-neighbour terms");
      continue;
    }
    out += real_matrix(embed_on_support(t, {origin, e}, d));
  }
  return out;
}

// Per-call cache of the reduced operators used by the mean-field expectation.
class MeanField {
 public:
  explicit MeanField(const IPepsState& s) : s_(s) {}

  const RMatrix& site(std::size_t c) {
    auto it = site_.find(c);
    if (it != site_.end()) return it->second;
    const RealTensor t = with_env(s_, c, {});
    const RMatrix m = t.to_matrix(labels_except(t, {"p"}), {"p"});
    return site_.emplace(c, m.transpose() * m).first->second;
  }

  // rho2[(pL pR), (pL' pR')] across `bond` with site0 on the left.
  const RMatrix& pair(std::size_t b) {
    auto it = pair_.find(b);
    if (it != pair_.end()) return it->second;
    const PepsBond& bond = s_.bonds[b];
    const auto d = static_cast<Eigen::Index>(s_.local_dim());
    const auto dim = static_cast<Eigen::Index>(bond.lambda.size());
    auto side = [&](std::size_t c, const std::string& leg) {
      const RealTensor t = with_env(s_, c, {leg});
      const RMatrix m = t.to_matrix(labels_except(t, {"p", leg}), {"p", leg});
      return RMatrix(m.transpose() * m);
    };
    const RMatrix rl = side(bond.site0, bond.leg0);
    const RMatrix rr = side(bond.site1, bond.leg1);
    const auto& lam = bond.lambda.values;
    RMatrix rho = RMatrix::Zero(d * d, d * d);
    for (Eigen::Index pl = 0; pl < d; ++pl)
      for (Eigen::Index pr = 0; pr < d; ++pr)
        for (Eigen::Index ql = 0; ql < d; ++ql)
          for (Eigen::Index qr = 0; qr < d; ++qr) {
            double acc = 0.0;
            for (Eigen::Index b0 = 0; b0 < dim; ++b0)
              for (Eigen::Index b1 = 0; b1 < dim; ++b1) {
                acc += lam[static_cast<std::size_t>(b0)] * lam[static_cast<std::size_t>(b1)] *
                       rl(pl * dim + b0, ql * dim + b1) * rr(pr * dim + b0, qr * dim + b1);
              }
            rho(pl * d + pr, ql * d + qr) = acc;
          }
    return pair_.emplace(b, std::move(rho)).first->second;
  }

 private:
  const IPepsState& s_;
  std::map<std::size_t, RMatrix> site_;
  std::map<std::size_t, RMatrix> pair_;
};

double sandwich(const RMatrix& rho, const RMatrix& op) {
  const double norm = rho.trace();
  if (!(norm > 0.0)) throw NumericError("PEPS mean-field norm vanished");
  return (rho * op.transpose()).trace() / norm;
}

}  // namespace

std::string leg_label(int axis, bool positive) {
  static const char* names[] = {"x", "y", "z"};
  if (axis < 0 || axis > 2) throw InputError("axis must be 0, 1 or 2");
  return std::string(names[axis]) + (positive ? "+" : "-");
}

std::size_t IPepsState::bond_dimension() const {
  std::size_t d = 0;
  for (const auto& b : bonds) d = std::max(d, b.lambda.size());
  return d;
}

std::size_t IPepsState::bond_at(std::size_t site, const std::string& leg) const {
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    if ((bonds[i].site0 == site && bonds[i].leg0 == leg) ||
        (bonds[i].site1 == site && bonds[i].leg1 == leg)) {
      return i;
    }
  }
  throw InputError("no bond on leg " + leg);
}

IPepsState random_product_ipeps(const LatticeSpec& lattice, int local_dim, std::uint64_t seed) {
  if (local_dim < 2) throw InputError("local dimension must be at least 2");
  if (lattice.dimension < 1 || lattice.dimension > 3) throw InputError("lattice dimension must be 1..3");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  IPepsState s;
  s.lattice = lattice;
  const std::size_t cells = lattice.unit_cell == UnitCell::Checkerboard ? 2 : 1;
  std::vector<Index> shape{{"p", static_cast<std::size_t>(local_dim)}};
  for (int a = 0; a < lattice.dimension; ++a) {
    shape.push_back({leg_label(a, true), 1});
    shape.push_back({leg_label(a, false), 1});
  }
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<double> v(static_cast<std::size_t>(local_dim));
    double n2 = 0.0;
    while (n2 < 1e-8) {
      n2 = 0.0;
      for (auto& x : v) {
        x = normal(rng);
        n2 += x * x;
      }
    }
    for (auto& x : v) x /= std::sqrt(n2);
    s.sites.emplace_back(shape, std::move(v));
  }
  for (int a = 0; a < lattice.dimension; ++a) {
    const std::string lp = leg_label(a, true), lm = leg_label(a, false);
    if (cells == 1) {
      s.bonds.push_back({0, lp, 0, lm, a, BondWeights::ones(lp, 1)});
    } else {
      s.bonds.push_back({0, lp, 1, lm, a, BondWeights::ones("A" + lp, 1)});
      s.bonds.push_back({1, lp, 0, lm, a, BondWeights::ones("B" + lp, 1)});
    }
  }
  return s;
}

BondUpdate simple_update_bond(const IPepsState& s, const RMatrix& gate, std::size_t bond,
                              std::size_t d_max, double rel_tol) {
  const PepsBond& bd = s.bonds.at(bond);
  if (bd.site0 == bd.site1) throw InputError("simple update needs a two-site unit cell");
  const std::size_t d = s.local_dim();
  if (static_cast<std::size_t>(gate.rows()) != d * d || gate.rows() != gate.cols()) {
    throw ShapeError("simple-update gate must be d^2 x d^2");
  }
  if (d_max == 0) throw InputError("D_max must be positive");

  struct Reduced {
    RealTensor q, r;
    std::vector<std::string> others;
  };
  auto reduce = [&](std::size_t site, const std::string& leg, const std::string& k,
                    const std::string& p) {
    const RealTensor t = with_env(s, site, {leg});
    Reduced out;
    out.others = labels_except(t, {"p", leg});
    const RMatrix m = t.to_matrix(out.others, {"p", leg});
    const Eigen::Index kk = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<RMatrix> qr(m);
    const RMatrix q = qr.householderQ() * RMatrix::Identity(m.rows(), kk);
    const RMatrix r = qr.matrixQR().topRows(kk).template triangularView<Eigen::Upper>();
    const auto ks = static_cast<std::size_t>(kk);
    out.q = RealTensor::from_matrix(q, indices_of(t, out.others), {Index{k, ks}});
    out.r = RealTensor::from_matrix(r, {Index{k, ks}}, {Index{p, d}, Index{"b", t.dim(leg)}});
    return out;
  };
  const Reduced r0 = reduce(bd.site0, bd.leg0, "k0", "p0");
  const Reduced r1 = reduce(bd.site1, bd.leg1, "k1", "p1");

  const RealTensor theta = contract(r0.r.scaled_along("b", bd.lambda.values), r1.r, {{"b", "b"}});
  const RealTensor g = RealTensor::from_matrix(gate, {{"q0", d}, {"q1", d}}, {{"p0", d}, {"p1", d}});
  const RealTensor evolved = contract(g, theta, {{"p0", "p0"}, {"p1", "p1"}});
  const auto svd = svd_truncate(evolved, {"k0", "q0"}, d_max, rel_tol, {"bn", "bn"});
  if (svd.rank() == 0) {
    throw NumericError("simple update truncated bond " + std::to_string(bond) + " to rank 0");
  }

  BondUpdate out;
  out.state = s;
  out.discarded_weight = svd.discarded_weight;
  auto restore = [&](std::size_t site, const std::string& leg, const Reduced& red,
                     const RealTensor& factor, const std::string& k, const std::string& q) {
    RealTensor t = contract(red.q, factor, {{k, k}}).relabeled({{q, "p"}, {"bn", leg}});
    for (const auto& other : red.others) {
      t.scale_along(other, floored_inverse(s.bonds[s.bond_at(site, other)].lambda.values, out.floored));
    }
    t = t.permuted(s.sites[site].labels());
    t *= 1.0 / t.max_abs();
    out.state.sites[site] = std::move(t);
  };
  restore(bd.site0, bd.leg0, r0, svd.u, "k0", "q0");
  restore(bd.site1, bd.leg1, r1, svd.v, "k1", "q1");
  out.state.bonds[bond].lambda = svd.weights(bd.lambda.label);
  return out;
}

double superorthogonality_residual(const IPepsState& s) {
  double worst = 0.0;
  for (const auto& b : s.bonds) worst = std::max(worst, bond_residual(s, b));
  return worst;
}

Superorthogonalization superorthogonalize(const IPepsState& s, const SuperorthoOptions& options) {
  Superorthogonalization out;
  out.state = s;
  out.residual = superorthogonality_residual(out.state);
  if (out.residual <= options.tol) {
    out.converged = true;
    return out;
  }
  IPepsState best = out.state;
  double best_residual = out.residual;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    for (std::size_t b = 0; b < out.state.bonds.size(); ++b) fix_bond(out.state, b);
    normalize_sites(out.state);
    out.iterations = it;
    out.residual = superorthogonality_residual(out.state);
    out.history.push_back(out.residual);
    if (out.residual < best_residual) {
      best = out.state;
      best_residual = out.residual;
    }
    if (out.residual <= options.tol) {
      out.converged = true;
      return out;
    }
  }
  out.state = std::move(best);
  out.residual = best_residual;
  return out;
}

IPepsState absorb_axis_mpo(const IPepsState& s, const Mpo& mpo) {
  if (s.lattice.unit_cell != UnitCell::SingleSite || s.sites.size() != 1) {
    throw InputError("MPO application needs a one-site unit cell");
  }
  if (mpo.axis < 0 || mpo.axis >= s.lattice.dimension) throw InputError("MPO axis out of range");
  if (static_cast<std::size_t>(mpo.local_dim()) != s.local_dim()) {
    throw ShapeError("MPO physical dimension does not match the state");
  }
  const std::string lp = leg_label(mpo.axis, true), lm = leg_label(mpo.axis, false);
  const std::vector<std::string> order = s.sites[0].labels();
  RealTensor t = contract(s.sites[0], mpo.w, {{"p", "in"}}).relabeled("out", "p");
  t = t.fused({lp, "wr"}, "fused+").fused({lm, "wl"}, "fused-");
  t = t.relabeled({{"fused+", lp}, {"fused-", lm}}).permuted(order);

  IPepsState out = s;
  out.sites[0] = std::move(t);
  PepsBond& bond = out.bonds[out.bond_at(0, lp)];
  std::vector<double> lam;
  for (double v : s.bonds[s.bond_at(0, lp)].lambda.values) {
    for (std::size_t r = 0; r < mpo.virtual_dim; ++r) lam.push_back(v);
  }
  bond.lambda.values = std::move(lam);
  bond.lambda.normalize();
  return out;
}

double truncate_bonds(IPepsState& s, std::size_t d_max) {
  if (d_max == 0) throw InputError("D_max must be positive");
  double worst = 0.0;
  for (auto& bond : s.bonds) {
    const auto& lam = bond.lambda.values;
    std::vector<std::size_t> order(lam.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lam[a] > lam[b]; });
    const bool sorted = std::is_sorted(order.begin(), order.end());
    if (lam.size() <= d_max && sorted) continue;
    const std::size_t keep = std::min(d_max, lam.size());
    RMatrix sel = RMatrix::Zero(static_cast<Eigen::Index>(lam.size()), static_cast<Eigen::Index>(keep));
    double total = 0.0, kept = 0.0;
    std::vector<double> values;
    for (double v : lam) total += v * v;
    for (std::size_t k = 0; k < keep; ++k) {
      sel(static_cast<Eigen::Index>(order[k]), static_cast<Eigen::Index>(k)) = 1.0;
      values.push_back(lam[order[k]]);
      kept += lam[order[k]] * lam[order[k]];
    }
    worst = std::max(worst, total > 0.0 ? 1.0 - kept / total : 0.0);
    s.sites[bond.site0] = s.sites[bond.site0].transformed(bond.leg0, sel);
    s.sites[bond.site1] = s.sites[bond.site1].transformed(bond.leg1, sel);
    bond.lambda.values = std::move(values);
    bond.lambda.normalize();
  }
  return worst;
}

MpoApplication apply_axis_mpo(const IPepsState& s, const Mpo& mpo, std::size_t d_max,
                              const SuperorthoOptions& options) {
  MpoApplication out;
  const IPepsState absorbed = absorb_axis_mpo(s, mpo);
  out.enlarged_dim = absorbed.bonds[absorbed.bond_at(0, leg_label(mpo.axis, true))].lambda.size();
  out.gauge = superorthogonalize(absorbed, options);
  out.state = out.gauge.state;
  out.discarded_weight = truncate_bonds(out.state, d_max);
  normalize_sites(out.state);
  return out;
}

double expectation_terms_peps(const IPepsState& s, const OperatorTerms& terms) {
  const bool checker = s.lattice.unit_cell == UnitCell::Checkerboard;
  const int anchors = checker ? 2 : 1;
  auto cell_of = [&](int anchor, const Site& x) -> std::size_t {
    return checker ? static_cast<std::size_t>(mod2(anchor + x[0] + x[1] + x[2])) : 0;
  };
  MeanField mf(s);
  double total = 0.0;
  for (const auto& term : terms.terms) {
    if (term.sites.size() == 1) {
      const RMatrix op = real_matrix(term.matrix);
      for (int a = 0; a < anchors; ++a) total += sandwich(mf.site(cell_of(a, term.sites[0])), op);
      continue;
    }
    if (term.sites.size() != 2) throw InputError("PEPS expectation supports one- or two-site terms");
    int axis = -1;
    bool forward = false;
    for (int a = 0; a < 3; ++a) {
      Site diff{term.sites[1][0] - term.sites[0][0], term.sites[1][1] - term.sites[0][1],
                term.sites[1][2] - term.sites[0][2]};
      Site e{0, 0, 0};
      e[static_cast<std::size_t>(a)] = 1;
      if (diff == e) axis = a, forward = true;
      Site me{0, 0, 0};
      me[static_cast<std::size_t>(a)] = -1;
      if (diff == me) axis = a, forward = false;
    }
    if (axis < 0 || axis >= s.lattice.dimension) {
      throw InputError("PEPS expectation supports nearest-neighbour pairs only");
    }
    const Site left = forward ? term.sites[0] : term.sites[1];
    const Site right = forward ? term.sites[1] : term.sites[0];
    const RMatrix op = real_matrix(embed_on_support(term, {left, right}, terms.local_dim));
    for (int a = 0; a < anchors; ++a) {
      const std::size_t b = s.bond_at(cell_of(a, left), leg_label(axis, true));
      total += sandwich(mf.pair(b), op);
    }
  }
  return total;
}

const char* to_string(PepsScheme scheme) {
  return scheme == PepsScheme::Gates ? "gates" : "mpo";
}

RMatrix checkerboard_bond_hamiltonian(const Model& model, int axis) {
  const int d = model.hamiltonian.local_dim;
  const double z = 2.0 * model.lattice.dimension;
  const RMatrix f = field_sum(model);
  const RMatrix id = RMatrix::Identity(d, d);
  return axis_bond(model, axis) + (kron(f, id) + kron(id, f)) / z;
}

MpoBlocks axis_line_blocks(const Model& model, int axis) {
  return hamiltonian_line_mpo(axis_bond(model, axis), field_sum(model),
                              1.0 / static_cast<double>(model.lattice.dimension));
}

EvolutionPeps run_evolution_peps(const Model& model, const PepsSchedule& schedule,
                                 std::size_t d_max) {
  if (model.lattice.dimension < 2) throw InputError("run_evolution_peps needs a 2D or 3D model");
  if (!(schedule.dtau > 0.0) || !(schedule.tau_max >= schedule.dtau)) {
    throw InputError("need dtau > 0 and tau_max >= dtau");
  }
  if (schedule.measure_every == 0) throw InputError("measure_every must be at least 1");
  if (d_max == 0) throw InputError("D_max must be positive");
  const int dim = model.lattice.dimension;
  const bool gates = schedule.scheme == PepsScheme::Gates;

  EvolutionPeps out;
  auto& meta = out.trace.metadata;
  meta.model = model.name;
  meta.scheme = to_string(schedule.scheme);
  meta.bond_dim = d_max;
  meta.dtau = schedule.dtau;
  meta.seed = schedule.seed;
  char tol[32];
  std::snprintf(tol, sizeof tol, "%g", schedule.so.tol);
  meta.extra["so_tol"] = tol;
  meta.extra["so_max_iter"] = std::to_string(schedule.so.max_iter);
  meta.extra["so_every"] = gates ? std::to_string(schedule.so_every) : "every-application";
  meta.extra["field_fraction"] = gates ? "1/z per bond" : "1/d per axis";

  IPepsState state = random_product_ipeps(
      model.lattice.with_unit_cell(gates ? UnitCell::Checkerboard : UnitCell::SingleSite),
      model.hamiltonian.local_dim, schedule.seed);

  std::vector<RMatrix> half_gates;
  std::vector<Mpo> mpos;
  if (gates) {
    for (int a = 0; a < dim; ++a) {
      half_gates.push_back(expm_symmetric(checkerboard_bond_hamiltonian(model, a), -0.5 * schedule.dtau));
    }
  } else {
    for (int a = 0; a < dim; ++a) mpos.push_back(build_wii(axis_line_blocks(model, a), schedule.dtau, a));
  }

  auto regauge = [&]() {
    Superorthogonalization so = superorthogonalize(state, schedule.so);
    if (!so.converged) ++out.so_unconverged;
    state = std::move(so.state);
  };

  const double floor = std::log(1e-14);
  double c_ref = std::numeric_limits<double>::quiet_NaN();
  auto measure = [&](double tau) {
    const double v = expectation_terms_peps(state, model.commutator);
    const double c = (std::isfinite(v) && v != 0.0) ? std::log(std::abs(v))
                                                    : std::numeric_limits<double>::quiet_NaN();
    out.trace.add(tau, c);
    if (std::isfinite(c) && !std::isfinite(c_ref)) c_ref = c;
    return std::isfinite(c) && c < c_ref + floor;
  };

  measure(0.0);
  const auto steps = static_cast<std::size_t>(std::floor(schedule.tau_max / schedule.dtau + 1e-9));
  for (std::size_t n = 1; n <= steps; ++n) {
    try {
      if (gates) {
        const std::size_t nb = state.bonds.size();
        for (std::size_t k = 0; k < 2 * nb; ++k) {
          const std::size_t b = k < nb ? k : 2 * nb - 1 - k;
          BondUpdate up = simple_update_bond(state, half_gates[static_cast<std::size_t>(state.bonds[b].axis)],
                                             b, d_max, schedule.rel_tol);
          out.max_discarded_weight = std::max(out.max_discarded_weight, up.discarded_weight);
          state = std::move(up.state);
        }
        if (schedule.so_every > 0 && n % schedule.so_every == 0) regauge();
      } else {
        for (const auto& mpo : mpos) {
          MpoApplication app = apply_axis_mpo(state, mpo, d_max, schedule.so);
          if (!app.gauge.converged) ++out.so_unconverged;
          out.max_discarded_weight = std::max(out.max_discarded_weight, app.discarded_weight);
          state = std::move(app.state);
        }
        regauge();
      }
      out.steps = n;
      if (n % schedule.measure_every == 0 && measure(static_cast<double>(n) * schedule.dtau)) break;
    } catch (const NumericError& e) {
      throw NumericError(step_failure(e, n, schedule.dtau, out.trace));
    }
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace gapscan
