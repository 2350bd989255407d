#include "gapscan/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gapscan/error.hpp"

namespace gapscan {

namespace {

constexpr Complex I{0.0, 1.0};

Site add(const Site& a, const Site& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Site sub(const Site& a, const Site& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t k = 0; k < exp; ++k) r *= base;
  return r;
}

}  // namespace

LatticeSpec LatticeSpec::hypercubic(int dimension, UnitCell cell) {
  if (dimension < 1 || dimension > 3) throw InputError("lattice dimension must be 1, 2 or 3");
  LatticeSpec l;
  l.dimension = dimension;
  l.connectivity = 2 * dimension;
  l.unit_cell = cell;
  for (int a = 0; a < dimension; ++a) {
    Site e{0, 0, 0};
    e[static_cast<std::size_t>(a)] = 1;
    l.axes.push_back(e);
  }
  return l;
}

void OperatorTerms::validate() const {
  if (local_dim < 2) throw InputError("local dimension must be at least 2");
  for (const auto& t : terms) {
    if (t.sites.empty()) throw InputError("operator term without sites");
    for (std::size_t i = 0; i < t.sites.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (t.sites[i] == t.sites[j]) throw InputError("operator term repeats a site");
      }
    }
    const auto n = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(local_dim), t.sites.size()));
    if (t.matrix.rows() != n || t.matrix.cols() != n) {
      throw InputError("operator term matrix does not match its support");
    }
    if (hermitian && !is_hermitian(t.matrix, 1e-12)) throw InputError("operator term is not Hermitian");
  }
}

std::size_t OperatorTerms::max_support() const {
  std::size_t m = 0;
  for (const auto& t : terms) m = std::max(m, t.sites.size());
  return m;
}

namespace spin {

CMatrix identity(int local_dim) { return CMatrix::Identity(local_dim, local_dim); }

CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

CMatrix pauli_y() {
  CMatrix m(2, 2);
  m << 0, -I, I, 0;
  return m;
}

CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

CMatrix spin1_x() {
  const double r = 1.0 / std::sqrt(2.0);
  CMatrix m(3, 3);
  m << 0, r, 0, r, 0, r, 0, r, 0;
  return m;
}

CMatrix spin1_y() {
  const Complex r = I / std::sqrt(2.0);
  CMatrix m(3, 3);
  m << 0, -r, 0, r, 0, -r, 0, r, 0;
  return m;
}

CMatrix spin1_z() {
  CMatrix m = CMatrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(2, 2) = -1.0;
  return m;
}

}  // namespace spin

std::pair<LatticeSpec, OperatorTerms> tfim(int dimension, double J, double g) {
  if (J == 0.0 && g == 0.0) throw InputError("tfim: J and g cannot both be zero");
  LatticeSpec lattice = LatticeSpec::hypercubic(dimension);
  OperatorTerms h;
  h.local_dim = 2;
  if (g != 0.0) h.terms.push_back({{Site{0, 0, 0}}, -g * spin::pauli_x()});
  if (J != 0.0) {
    const CMatrix zz = kron(spin::pauli_z(), spin::pauli_z());
    for (const auto& e : lattice.axes) h.terms.push_back({{Site{0, 0, 0}, e}, -J * zz});
  }
  return {lattice, h};
}

OperatorTerms tfim_gap_operator() {
  OperatorTerms o;
  o.local_dim = 2;
  o.terms.push_back({{Site{0, 0, 0}}, spin::pauli_y()});
  return o;
}

std::pair<LatticeSpec, OperatorTerms> haldane() {
  OperatorTerms h;
  h.local_dim = 3;
  const CMatrix bond = kron(spin::spin1_x(), spin::spin1_x()) +
                       kron(spin::spin1_y(), spin::spin1_y()) +
                       kron(spin::spin1_z(), spin::spin1_z());
  h.terms.push_back({{Site{0, 0, 0}, Site{1, 0, 0}}, bond});
  return {LatticeSpec::hypercubic(1), h};
}

OperatorTerms haldane_gap_operator() {
  OperatorTerms o;
  o.local_dim = 3;
  o.terms.push_back({{Site{0, 0, 0}, Site{1, 0, 0}}, kron(spin::spin1_y(), spin::spin1_z())});
  return o;
}

CMatrix embed_on_support(const LocalTerm& term, const std::vector<Site>& support, int local_dim) {
  const std::size_t d = static_cast<std::size_t>(local_dim);
  const std::size_t n = support.size();
  std::vector<std::size_t> where(term.sites.size());
  for (std::size_t k = 0; k < term.sites.size(); ++k) {
    const auto it = std::find(support.begin(), support.end(), term.sites[k]);
    if (it == support.end()) throw InputError("embed_on_support: site outside support");
    where[k] = static_cast<std::size_t>(it - support.begin());
  }
  const std::size_t full = ipow(d, n);
  const std::size_t local = ipow(d, term.sites.size());
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(full), static_cast<Eigen::Index>(full));
  std::vector<std::size_t> digits(n);
  for (std::size_t col = 0; col < full; ++col) {
    std::size_t rem = col;
    for (std::size_t k = n; k-- > 0;) {
      digits[k] = rem % d;
      rem /= d;
    }
    std::size_t sub_col = 0;
    for (std::size_t w : where) sub_col = sub_col * d + digits[w];
    for (std::size_t sub_row = 0; sub_row < local; ++sub_row) {
      const Complex v = term.matrix(static_cast<Eigen::Index>(sub_row),
                                    static_cast<Eigen::Index>(sub_col));
      if (v == Complex(0.0)) continue;
      std::vector<std::size_t> row_digits = digits;
      std::size_t r = sub_row;
      for (std::size_t k = where.size(); k-- > 0;) {
        row_digits[where[k]] = r % d;
        r /= d;
      }
      std::size_t row = 0;
      for (std::size_t k = 0; k < n; ++k) row = row * d + row_digits[k];
      out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += v;
    }
  }
  return out;
}

OperatorTerms commutator_terms(const OperatorTerms& h, const OperatorTerms& o) {
  if (h.local_dim != o.local_dim) throw InputError("commutator_terms: local dimensions differ");
  std::map<std::vector<Site>, CMatrix> merged;
  double scale = 0.0;
  for (const auto& ot : o.terms) {
    for (const auto& ht : h.terms) {
      // every shift that makes the h placement overlap the o placement
      std::vector<Site> shifts;
      for (const auto& so : ot.sites) {
        for (const auto& sh : ht.sites) {
          const Site t = sub(so, sh);
          if (std::find(shifts.begin(), shifts.end(), t) == shifts.end()) shifts.push_back(t);
        }
      }
      for (const auto& t : shifts) {
        LocalTerm shifted{{}, ht.matrix};
        for (const auto& s : ht.sites) shifted.sites.push_back(add(s, t));
        std::vector<Site> support = ot.sites;
        support.insert(support.end(), shifted.sites.begin(), shifted.sites.end());
        std::sort(support.begin(), support.end());
        support.erase(std::unique(support.begin(), support.end()), support.end());
        const CMatrix hm = embed_on_support(shifted, support, h.local_dim);
        const CMatrix om = embed_on_support(ot, support, o.local_dim);
        const CMatrix c = I * (hm * om - om * hm);
        scale = std::max(scale, hm.cwiseAbs().maxCoeff() * om.cwiseAbs().maxCoeff());
        auto [it, inserted] = merged.try_emplace(support, c);
        if (!inserted) it->second += c;
      }
    }
  }
  OperatorTerms out;
  out.local_dim = h.local_dim;
  out.hermitian = true;
  for (auto& [support, m] : merged) {
    if (m.cwiseAbs().maxCoeff() <= 1e-14 * std::max(scale, 1.0)) continue;
    out.terms.push_back({support, std::move(m)});
  }
  out.validate();
  return out;
}

Model make_tfim_model(int dimension, double J, double g) {
  auto [lattice, h] = tfim(dimension, J, g);
  Model m;
  m.name = "tfim" + std::to_string(dimension) + "d";
  m.lattice = lattice;
  m.hamiltonian = std::move(h);
  m.gap_operator = tfim_gap_operator();
  m.commutator = commutator_terms(m.hamiltonian, m.gap_operator);
  m.J = J;
  m.g = g;
  return m;
}

Model make_haldane_model() {
  auto [lattice, h] = haldane();
  Model m;
  m.name = "haldane";
  m.lattice = lattice;
  m.hamiltonian = std::move(h);
  m.gap_operator = haldane_gap_operator();
  m.commutator = commutator_terms(m.hamiltonian, m.gap_operator);
  m.J = 1.0;
  return m;
}

std::size_t Cluster::sites() const {
  std::size_t n = 1;
  for (int a = 0; a < dimension; ++a) n *= static_cast<std::size_t>(extent[static_cast<std::size_t>(a)]);
  return n;
}

std::size_t Cluster::site_index(const Site& s) const {
  std::size_t idx = 0;
  for (int a = 0; a < dimension; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    idx = idx * static_cast<std::size_t>(extent[ua]) + static_cast<std::size_t>(s[ua]);
  }
  return idx;
}

CMatrix dense_operator(const OperatorTerms& terms, const Cluster& cluster) {
  const std::size_t n = cluster.sites();
  const std::size_t d = static_cast<std::size_t>(terms.local_dim);
  const std::size_t full = ipow(d, n);
  if (full > 4096) throw InputError("dense_operator: cluster too large");
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(full), static_cast<Eigen::Index>(full));

  std::vector<Site> anchors;
  for (int x = 0; x < (cluster.dimension > 0 ? cluster.extent[0] : 1); ++x) {
    for (int y = 0; y < (cluster.dimension > 1 ? cluster.extent[1] : 1); ++y) {
      for (int z = 0; z < (cluster.dimension > 2 ? cluster.extent[2] : 1); ++z) {
        anchors.push_back({x, y, z});
      }
    }
  }
  for (const auto& anchor : anchors) {
    for (const auto& term : terms.terms) {
      std::vector<std::size_t> idx;
      bool inside = true;
      for (const auto& off : term.sites) {
        Site s = add(anchor, off);
        for (int a = 0; a < 3; ++a) {
          const auto ua = static_cast<std::size_t>(a);
          const int ext = a < cluster.dimension ? cluster.extent[ua] : 1;
          if (a >= cluster.dimension && s[ua] != 0) {
            throw InputError("dense_operator: term extends beyond the cluster dimension");
          }
          if (cluster.periodic) {
            s[ua] = ((s[ua] % ext) + ext) % ext;
          } else if (s[ua] < 0 || s[ua] >= ext) {
            inside = false;
          }
        }
        if (!inside) break;
        idx.push_back(cluster.site_index(s));
      }
      if (!inside) continue;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (idx[i] == idx[j]) throw InputError("dense_operator: term wraps onto itself");
        }
      }
      // embed on the whole cluster: sites ordered by cluster index
      std::vector<Site> support(n);
      for (std::size_t k = 0; k < n; ++k) support[k] = {static_cast<int>(k), 0, 0};
      LocalTerm placed{{}, term.matrix};
      for (std::size_t k : idx) placed.sites.push_back({static_cast<int>(k), 0, 0});
      out += embed_on_support(placed, support, terms.local_dim);
    }
  }
  return out;
}

}  // namespace gapscan
