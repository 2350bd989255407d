#include "gapscan/imps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "gapscan/error.hpp"

namespace gapscan {

namespace {

Sublattice other(Sublattice s) { return s == Sublattice::A ? Sublattice::B : Sublattice::A; }

int mod2(int x) { return ((x % 2) + 2) % 2; }

std::vector<double> random_unit_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      norm2 += x * x;
    }
  } while (norm2 < 1e-8);
  for (auto& x : v) x /= std::sqrt(norm2);
  return v;
}

std::vector<double> floored_inverse(const std::vector<double>& w, std::size_t& floored) {
  std::vector<double> inv(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > kPinvFloor) {
      inv[i] = 1.0 / w[i];
    } else {
      inv[i] = 0.0;
      ++floored;
    }
  }
  return inv;
}

// A commutator or Hamiltonian term laid out on a contiguous window of the chain.
struct ChainTerm {
  int x0 = 0;
  int span = 1;
  RMatrix matrix;
};

std::vector<ChainTerm> chain_terms(const OperatorTerms& terms) {
  std::vector<ChainTerm> out;
  for (const auto& t : terms.terms) {
    int lo = t.sites.front()[0], hi = lo;
    for (const auto& s : t.sites) {
      if (s[1] != 0 || s[2] != 0) throw InputError("iMPS terms must lie along the chain axis");
      lo = std::min(lo, s[0]);
      hi = std::max(hi, s[0]);
    }
    const int span = hi - lo + 1;
    if (span > 4) throw InputError("iMPS expectation supports terms spanning at most four sites");
    std::vector<Site> support;
    for (int x = lo; x <= hi; ++x) support.push_back({x, 0, 0});
    out.push_back({lo, span, real_matrix(embed_on_support(t, support, terms.local_dim))});
  }
  return out;
}

// theta[l, p0, .., p_{n-1}, r] on sites x0..x0+n-1, with the outer weights absorbed.
RealTensor window_tensor(const IMpsState& s, Sublattice first, int span) {
  Sublattice t = first;
  RealTensor theta = s.gamma(t)
                         .scaled_along("l", s.lambda(other(t)).values)
                         .scaled_along("r", s.lambda(t).values)
                         .relabeled("p", "p0");
  for (int k = 1; k < span; ++k) {
    t = other(t);
    const RealTensor next =
        s.gamma(t).relabeled({{"l", "m"}, {"p", "p" + std::to_string(k)}}).scaled_along(
            "r", s.lambda(t).values);
    theta = contract(theta.relabeled("r", "m"), next, {{"m", "m"}});
  }
  return theta;
}

double expectation_prepared(const IMpsState& s, const std::vector<ChainTerm>& terms,
                            Sublattice anchor) {
  std::map<std::pair<int, int>, std::pair<RMatrix, double>> cache;
  double total = 0.0;
  for (const auto& term : terms) {
    const auto key = std::make_pair(term.x0, term.span);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const Sublattice first = mod2(term.x0) == 0 ? anchor : other(anchor);
      const RealTensor theta = window_tensor(s, first, term.span);
      std::vector<std::string> rows;
      for (int k = 0; k < term.span; ++k) rows.push_back("p" + std::to_string(k));
      RMatrix m = theta.to_matrix(rows, {"l", "r"});
      const double norm2 = m.squaredNorm();
      if (!(norm2 > 0.0)) throw NumericError("iMPS state has zero norm");
      it = cache.emplace(key, std::make_pair(std::move(m), norm2)).first;
    }
    const RMatrix& m = it->second.first;
    total += (m.transpose() * term.matrix * m).trace() / it->second.second;
  }
  return total;
}

// G[a, (pA pB), b] = Gamma_A lambda_A Gamma_B as d^2 matrices of size D x D.
std::vector<RMatrix> merged_cell(const IMpsState& s) {
  const RealTensor a = s.gamma_a.scaled_along("r", s.lambda_a.values).relabeled(
      {{"p", "pa"}, {"r", "m"}});
  const RealTensor b = s.gamma_b.relabeled({{"p", "pb"}, {"l", "m"}});
  const RealTensor g = contract(a, b, {{"m", "m"}});  // l pa pb r
  const std::size_t d = s.local_dim();
  const std::size_t dl = g.dim("l"), dr = g.dim("r");
  std::vector<RMatrix> out(d * d, RMatrix(dl, dr));
  const auto data = g.data();
  for (std::size_t l = 0; l < dl; ++l)
    for (std::size_t p = 0; p < d * d; ++p)
      for (std::size_t r = 0; r < dr; ++r) out[p](l, r) = data[(l * d * d + p) * dr + r];
  return out;
}

RMatrix dominant_fixed_point(const std::vector<RMatrix>& g, const RVector& lam, bool left,
                             double tol, std::size_t max_iter, std::size_t& iterations) {
  const Eigen::Index dim = lam.size();
  RMatrix x = RMatrix::Identity(dim, dim) / std::sqrt(static_cast<double>(dim));
  const auto L = lam.asDiagonal();
  for (iterations = 1; iterations <= max_iter; ++iterations) {
    RMatrix y = RMatrix::Zero(dim, dim);
    for (const auto& gp : g) {
      if (left) {
        y.noalias() += gp.transpose() * (L * x * L) * gp;
      } else {
        y.noalias() += gp * (L * x * L) * gp.transpose();
      }
    }
    y = 0.5 * (y + y.transpose());
    y /= y.norm();
    const double change = (y - x).norm();
    x = std::move(y);
    if (change < tol) break;
  }
  iterations = std::min(iterations, max_iter);
  return x;
}

// X with m = X X^T, and X^{-T}.
std::pair<RMatrix, RMatrix> psd_factor(const RMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericError("canonicalize: eigensolver failed");
  RVector w = es.eigenvalues();
  const double wmax = w.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::max(w(i), 1e-15 * wmax);
  const RMatrix& v = es.eigenvectors();
  RMatrix x = v * w.cwiseSqrt().asDiagonal();
  RMatrix x_inv_t = v * w.cwiseSqrt().cwiseInverse().asDiagonal();
  return {std::move(x), std::move(x_inv_t)};
}

double lambda_distance(const BondWeights& a, const BondWeights& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
    const double x = i < a.size() ? a.values[i] : 0.0;
    const double y = i < b.size() ? b.values[i] : 0.0;
    d = std::max(d, std::abs(x - y));
  }
  return d;
}

}  // namespace

std::size_t IMpsState::bond_dimension() const { return std::max(lambda_a.size(), lambda_b.size()); }

IMpsState random_product_imps(int local_dim, std::uint64_t seed) {
  if (local_dim < 2) throw InputError("local dimension must be at least 2");
  std::mt19937_64 rng(seed);
  IMpsState s;
  const auto d = static_cast<std::size_t>(local_dim);
  const std::vector<Index> shape{{"l", 1}, {"p", d}, {"r", 1}};
  s.gamma_a = RealTensor(shape, random_unit_vector(rng, local_dim));
  s.gamma_b = RealTensor(shape, random_unit_vector(rng, local_dim));
  s.lambda_a = BondWeights::ones("ab", 1);
  s.lambda_b = BondWeights::ones("ba", 1);
  return s;
}

TebdStep tebd_step(const IMpsState& s, const RMatrix& gate, Sublattice bond, std::size_t d_max,
                   double rel_tol) {
  const std::size_t d = s.local_dim();
  if (static_cast<std::size_t>(gate.rows()) != d * d || gate.rows() != gate.cols()) {
    throw ShapeError("TEBD gate must be d^2 x d^2");
  }
  if (d_max == 0) throw InputError("D_max must be positive");
  const Sublattice left = bond, right = other(bond);
  const BondWeights& outer = s.lambda(right);
  const BondWeights& middle = s.lambda(left);

  const RealTensor a = s.gamma(left)
                           .scaled_along("l", outer.values)
                           .scaled_along("r", middle.values)
                           .relabeled({{"p", "pa"}, {"r", "m"}});
  const RealTensor b =
      s.gamma(right).scaled_along("r", outer.values).relabeled({{"p", "pb"}, {"l", "m"}});
  const RealTensor theta = contract(a, b, {{"m", "m"}});
  const RealTensor g = RealTensor::from_matrix(gate, {{"qa", d}, {"qb", d}}, {{"pa", d}, {"pb", d}});
  const RealTensor evolved = contract(g, theta, {{"pa", "pa"}, {"pb", "pb"}});  // qa qb l r

  const auto svd = svd_truncate(evolved, {"l", "qa"}, d_max, rel_tol, {"r", "l"});
  if (svd.rank() == 0) throw NumericError("TEBD step annihilated the state");

  TebdStep out;
  out.discarded_weight = svd.discarded_weight;
  const std::vector<double> inv = floored_inverse(outer.values, out.floored);
  RealTensor new_left = svd.u.relabeled("qa", "p");
  RealTensor new_right = svd.v.relabeled("qb", "p");
  new_left.scale_along("l", inv);
  new_right.scale_along("r", inv);

  out.state = s;
  BondWeights lam = svd.weights(middle.label);
  if (left == Sublattice::A) {
    out.state.gamma_a = std::move(new_left);
    out.state.gamma_b = std::move(new_right);
    out.state.lambda_a = std::move(lam);
  } else {
    out.state.gamma_b = std::move(new_left);
    out.state.gamma_a = std::move(new_right);
    out.state.lambda_b = std::move(lam);
  }
  return out;
}

double expectation_terms_imps_at(const IMpsState& s, const OperatorTerms& terms, Sublattice anchor) {
  return expectation_prepared(s, chain_terms(terms), anchor);
}

double expectation_terms_imps(const IMpsState& s, const OperatorTerms& terms) {
  const auto prepared = chain_terms(terms);
  return expectation_prepared(s, prepared, Sublattice::A) +
         expectation_prepared(s, prepared, Sublattice::B);
}

double canonical_residual(const IMpsState& s) {
  double worst = 0.0;
  for (Sublattice t : {Sublattice::A, Sublattice::B}) {
    const RealTensor left_form = s.gamma(t).scaled_along("l", s.lambda(other(t)).values);
    const RealTensor right_form = s.gamma(t).scaled_along("r", s.lambda(t).values);
    const RMatrix ml = left_form.to_matrix({"l", "p"}, {"r"});
    const RMatrix mr = right_form.to_matrix({"l"}, {"p", "r"});
    for (const RMatrix& m : {RMatrix(ml.transpose() * ml), RMatrix(mr * mr.transpose())}) {
      const double scale = m.trace() / static_cast<double>(m.rows());
      if (!(scale > 0.0)) return std::numeric_limits<double>::infinity();
      const RMatrix dev = m / scale - RMatrix::Identity(m.rows(), m.cols());
      worst = std::max(worst, dev.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

Canonicalization canonicalize(const IMpsState& s, double tol, std::size_t max_iter) {
  const std::vector<RMatrix> g = merged_cell(s);
  const RVector lam = Eigen::Map<const RVector>(s.lambda_b.values.data(),
                                                static_cast<Eigen::Index>(s.lambda_b.size()));
  std::size_t it_l = 0, it_r = 0;
  const RMatrix left = dominant_fixed_point(g, lam, true, tol, max_iter, it_l);
  const RMatrix right = dominant_fixed_point(g, lam, false, tol, max_iter, it_r);
  const auto [xl, xl_inv_t] = psd_factor(left);
  const auto [xr, xr_inv_t] = psd_factor(right);

  Eigen::BDCSVD<RMatrix> svd(xl.transpose() * lam.asDiagonal() * xr,
                             Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  Eigen::Index keep = 0;
  while (keep < sv.size() && sv(keep) > 1e-14 * sv(0)) ++keep;
  const RMatrix a0 = xl_inv_t * svd.matrixU().leftCols(keep);  // acts on the right leg
  const RMatrix a1 = xr_inv_t * svd.matrixV().leftCols(keep);  // acts on the left leg

  std::vector<double> new_outer(sv.data(), sv.data() + keep);
  const std::size_t d = s.local_dim();
  const auto k = static_cast<std::size_t>(keep);
  // theta[l, pa, pb, r] = lambda' G' lambda' with G'_P = a1^T G_P a0.
  std::vector<double> theta(k * d * d * k);
  for (std::size_t p = 0; p < d * d; ++p) {
    const RMatrix gp = a1.transpose() * g[p] * a0;
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t r = 0; r < k; ++r)
        theta[(l * d * d + p) * k + r] = new_outer[l] * gp(static_cast<Eigen::Index>(l),
                                                           static_cast<Eigen::Index>(r)) *
                                         new_outer[r];
  }
  const RealTensor t({{"l", k}, {"pa", d}, {"pb", d}, {"r", k}}, std::move(theta));
  const auto split = svd_truncate(t, {"l", "pa"}, s.lambda_a.size(), 1e-14, {"r", "l"});
  if (split.rank() == 0) throw NumericError("canonicalize: degenerate state");

  BondWeights outer{s.lambda_b.label, new_outer};
  outer.normalize();
  std::size_t floored = 0;
  std::vector<double> inv = floored_inverse(outer.values, floored);
  // The outer weights were absorbed unnormalized; undo them with the same scale.
  const double scale = outer.values.front() / new_outer.front();
  for (auto& x : inv) x *= scale;

  Canonicalization out;
  out.iterations = std::max(it_l, it_r);
  out.state.gamma_a = split.u.relabeled("pa", "p").scaled_along("l", inv);
  out.state.gamma_b = split.v.relabeled("pb", "p").scaled_along("r", inv);
  out.state.lambda_a = split.weights(s.lambda_a.label);
  out.state.lambda_b = std::move(outer);
  out.lambda_change = std::max(lambda_distance(out.state.lambda_a, s.lambda_a),
                               lambda_distance(out.state.lambda_b, s.lambda_b));
  return out;
}

RMatrix bond_hamiltonian_1d(const OperatorTerms& h) {
  const auto d = static_cast<Eigen::Index>(h.local_dim);
  RMatrix bond = RMatrix::Zero(d * d, d * d);
  const RMatrix id = RMatrix::Identity(d, d);
  for (const auto& term : h.terms) {
    const RMatrix m = real_matrix(term.matrix);
    if (term.sites.size() == 1 && term.sites[0] == Site{0, 0, 0}) {
      bond += 0.5 * (kron(m, id) + kron(id, m));
    } else if (term.sites.size() == 2 && term.sites[0] == Site{0, 0, 0} &&
               term.sites[1] == Site{1, 0, 0}) {
      bond += m;
    } else if (term.sites.size() == 2 && term.sites[0] == Site{1, 0, 0} &&
               term.sites[1] == Site{0, 0, 0}) {
      std::vector<Site> support{{0, 0, 0}, {1, 0, 0}};
      bond += real_matrix(embed_on_support(term, support, h.local_dim));
    } else {
      throw InputError("1D TEBD needs on-site or nearest-neighbour Hamiltonian terms");
    }
  }
  return bond;
}

Evolution1D run_evolution_1d(const Model& model, const Schedule1D& schedule, std::size_t d_max,
                             std::uint64_t seed) {
  if (model.lattice.dimension != 1) throw InputError("run_evolution_1d needs a 1D model");
  if (!(schedule.dtau > 0.0) || !(schedule.tau_max >= schedule.dtau)) {
    throw InputError("need dtau > 0 and tau_max >= dtau");
  }
  if (schedule.measure_every == 0) throw InputError("measure_every must be at least 1");

  const RMatrix h = bond_hamiltonian_1d(model.hamiltonian);
  const RMatrix half = expm_symmetric(h, -0.5 * schedule.dtau);
  const RMatrix full = expm_symmetric(h, -schedule.dtau);
  const std::vector<ChainTerm> comm = chain_terms(model.commutator);

  Evolution1D out;
  out.trace.metadata.model = model.name;
  out.trace.metadata.scheme = "tebd";
  out.trace.metadata.bond_dim = d_max;
  out.trace.metadata.dtau = schedule.dtau;
  out.trace.metadata.seed = seed;
  out.trace.metadata.extra["trotter_order"] = "2";
  out.trace.metadata.extra["anchor"] = schedule.anchor == Sublattice::A ? "A" : "B";

  IMpsState state = random_product_imps(model.hamiltonian.local_dim, seed);
  const double floor = std::log(1e-14);
  double c_ref = std::numeric_limits<double>::quiet_NaN();
  auto measure = [&](double tau) {
    const double v = expectation_prepared(state, comm, schedule.anchor);
    const double c = (std::isfinite(v) && v != 0.0) ? std::log(std::abs(v))
                                                    : std::numeric_limits<double>::quiet_NaN();
    out.trace.add(tau, c);
    if (std::isfinite(c) && !std::isfinite(c_ref)) c_ref = c;
    return std::isfinite(c) && c < c_ref + floor;
  };
  auto apply = [&](const RMatrix& gate, Sublattice b) {
    TebdStep step = tebd_step(state, gate, b, d_max, schedule.rel_tol);
    out.max_discarded_weight = std::max(out.max_discarded_weight, step.discarded_weight);
    out.floored += step.floored;
    state = std::move(step.state);
  };

  measure(0.0);
  const auto steps = static_cast<std::size_t>(std::floor(schedule.tau_max / schedule.dtau + 1e-9));
  for (std::size_t n = 1; n <= steps; ++n) {
    try {
      apply(half, Sublattice::A);
      apply(full, Sublattice::B);
      apply(half, Sublattice::A);
      if (n % schedule.measure_every == 0 && measure(static_cast<double>(n) * schedule.dtau)) break;
    } catch (const NumericError& e) {
      throw NumericError(step_failure(e, n, schedule.dtau, out.trace));
    }
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace gapscan
