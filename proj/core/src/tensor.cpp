#include "gapscan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace gapscan {

namespace {

std::size_t product(const std::vector<Index>& idx) {
  std::size_t n = 1;
  for (const auto& i : idx) n *= i.dim;
  return n;
}

template <class Scalar>
bool is_finite(const Scalar& x) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return std::isfinite(x);
  } else {
    return std::isfinite(x.real()) && std::isfinite(x.imag());
  }
}

// Strided copy: output axis k is input axis perm[k].
template <class Scalar>
void permute_into(const std::vector<std::size_t>& in_dims, std::span<const Scalar> in,
                  const std::vector<std::size_t>& perm, std::span<Scalar> out) {
  const std::size_t r = in_dims.size();
  if (r == 0) {
    out[0] = in[0];
    return;
  }
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t k = r - 1; k > 0; --k) in_strides[k - 1] = in_strides[k] * in_dims[k];
  std::vector<std::size_t> out_dims(r), strides(r);
  for (std::size_t k = 0; k < r; ++k) {
    out_dims[k] = in_dims[perm[k]];
    strides[k] = in_strides[perm[k]];
  }
  const std::size_t inner = out_dims[r - 1];
  const std::size_t inner_stride = strides[r - 1];
  std::vector<std::size_t> counter(r, 0);
  std::size_t src = 0;
  const std::size_t total = out.size();
  for (std::size_t dst = 0; dst < total; dst += inner) {
    const Scalar* p = in.data() + src;
    Scalar* q = out.data() + dst;
    if (inner_stride == 1) {
      std::copy(p, p + inner, q);
    } else {
      for (std::size_t i = 0; i < inner; ++i) q[i] = p[i * inner_stride];
    }
    for (std::size_t k = r - 1; k-- > 0;) {
      src += strides[k];
      if (++counter[k] < out_dims[k]) break;
      src -= strides[k] * out_dims[k];
      counter[k] = 0;
    }
  }
}

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

template <class Scalar>
BasicTensor<Scalar>::BasicTensor(std::vector<Index> indices)
    : indices_(std::move(indices)), data_(product(indices_), Scalar{0}) {
  validate();
}

template <class Scalar>
BasicTensor<Scalar>::BasicTensor(std::vector<Index> indices, std::vector<Scalar> data)
    : indices_(std::move(indices)), data_(std::move(data)) {
  validate();
  require_finite("BasicTensor");
}

template <class Scalar>
void BasicTensor<Scalar>::validate() const {
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k].dim == 0) {
      throw ShapeError("tensor index '" + indices_[k].label + "' has dimension 0");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (indices_[j].label == indices_[k].label) {
        throw ShapeError("duplicate tensor label '" + indices_[k].label + "'");
      }
    }
  }
  if (product(indices_) != data_.size()) {
    throw ShapeError("tensor data length does not match the product of dimensions");
  }
}

template <class Scalar>
void BasicTensor<Scalar>::require_finite(const char* where) const {
  if (!all_finite()) throw NumericError(std::string(where) + ": non-finite tensor entry");
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::from_matrix(const Matrix& m, std::string row_label,
                                                     std::string col_label) {
  return from_matrix(m, {Index{std::move(row_label), static_cast<std::size_t>(m.rows())}},
                     {Index{std::move(col_label), static_cast<std::size_t>(m.cols())}});
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::from_matrix(const Matrix& m, std::vector<Index> rows,
                                                     std::vector<Index> cols) {
  const std::size_t nr = product(rows);
  const std::size_t nc = product(cols);
  if (nr != static_cast<std::size_t>(m.rows()) || nc != static_cast<std::size_t>(m.cols())) {
    throw ShapeError("from_matrix: index dimensions do not match matrix shape");
  }
  std::vector<Index> all = std::move(rows);
  all.insert(all.end(), cols.begin(), cols.end());
  std::vector<Scalar> data(nr * nc);
  Eigen::Map<RowMatrix<Scalar>>(data.data(), static_cast<Eigen::Index>(nr),
                                static_cast<Eigen::Index>(nc)) = m;
  return BasicTensor(std::move(all), std::move(data));
}

template <class Scalar>
std::vector<std::string> BasicTensor<Scalar>::labels() const {
  std::vector<std::string> out;
  out.reserve(indices_.size());
  for (const auto& i : indices_) out.push_back(i.label);
  return out;
}

template <class Scalar>
std::vector<std::size_t> BasicTensor<Scalar>::dims() const {
  std::vector<std::size_t> out;
  out.reserve(indices_.size());
  for (const auto& i : indices_) out.push_back(i.dim);
  return out;
}

template <class Scalar>
bool BasicTensor<Scalar>::has(const std::string& label) const {
  return std::any_of(indices_.begin(), indices_.end(),
                     [&](const Index& i) { return i.label == label; });
}

template <class Scalar>
std::size_t BasicTensor<Scalar>::position(const std::string& label) const {
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k].label == label) return k;
  }
  throw ShapeError("tensor has no index labelled '" + label + "'");
}

template <class Scalar>
std::size_t BasicTensor<Scalar>::offset(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != indices_.size()) throw ShapeError("at(): wrong number of indices");
  std::size_t off = 0;
  std::size_t k = 0;
  for (std::size_t v : idx) {
    if (v >= indices_[k].dim) throw ShapeError("at(): index out of range");
    off = off * indices_[k].dim + v;
    ++k;
  }
  return off;
}

template <class Scalar>
Scalar& BasicTensor<Scalar>::at(std::initializer_list<std::size_t> idx) {
  return data_[offset(idx)];
}

template <class Scalar>
const Scalar& BasicTensor<Scalar>::at(std::initializer_list<std::size_t> idx) const {
  return data_[offset(idx)];
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::permuted(const std::vector<std::string>& order) const {
  if (order.size() != indices_.size()) throw ShapeError("permuted: label count mismatch");
  std::vector<std::size_t> perm(order.size());
  bool identity = true;
  for (std::size_t k = 0; k < order.size(); ++k) {
    perm[k] = position(order[k]);
    identity = identity && perm[k] == k;
  }
  if (identity) return *this;
  BasicTensor out;
  out.indices_.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) out.indices_[k] = indices_[perm[k]];
  out.data_.resize(data_.size());
  permute_into<Scalar>(dims(), data_, perm, out.data_);
  out.validate();
  return out;
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::relabeled(const std::string& from,
                                                   const std::string& to) const {
  return relabeled({{from, to}});
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::relabeled(
    const std::vector<std::pair<std::string, std::string>>& renames) const {
  BasicTensor out = *this;
  std::vector<std::size_t> pos;
  for (const auto& [from, to] : renames) pos.push_back(position(from));
  for (std::size_t k = 0; k < renames.size(); ++k) out.indices_[pos[k]].label = renames[k].second;
  out.validate();
  return out;
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::fused(const std::vector<std::string>& group,
                                               const std::string& label) const {
  if (group.empty()) throw ShapeError("fused: empty group");
  std::size_t first = rank();
  for (const auto& g : group) first = std::min(first, position(g));
  std::vector<std::string> order;
  std::vector<Index> new_idx;
  auto in_group = [&](const std::string& l) {
    return std::find(group.begin(), group.end(), l) != group.end();
  };
  std::size_t fused_dim = 1;
  for (const auto& g : group) fused_dim *= dim(g);
  for (std::size_t k = 0; k < rank(); ++k) {
    if (k == first) {
      order.insert(order.end(), group.begin(), group.end());
      new_idx.push_back(Index{label, fused_dim});
    }
    if (!in_group(indices_[k].label)) {
      order.push_back(indices_[k].label);
      new_idx.push_back(indices_[k]);
    }
  }
  BasicTensor out = permuted(order);
  out.indices_ = std::move(new_idx);
  out.validate();
  return out;
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::split(const std::string& label,
                                               const std::vector<Index>& parts) const {
  const std::size_t p = position(label);
  if (product(parts) != indices_[p].dim) throw ShapeError("split: part dimensions mismatch");
  BasicTensor out = *this;
  out.indices_.erase(out.indices_.begin() + static_cast<std::ptrdiff_t>(p));
  out.indices_.insert(out.indices_.begin() + static_cast<std::ptrdiff_t>(p), parts.begin(),
                      parts.end());
  out.validate();
  return out;
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::sliced(const std::string& label, std::size_t keep) const {
  const std::size_t p = position(label);
  const std::size_t n = indices_[p].dim;
  if (keep == 0 || keep > n) throw ShapeError("sliced: keep out of range");
  if (keep == n) return *this;
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t k = 0; k < p; ++k) outer *= indices_[k].dim;
  for (std::size_t k = p + 1; k < rank(); ++k) inner *= indices_[k].dim;
  BasicTensor out;
  out.indices_ = indices_;
  out.indices_[p].dim = keep;
  out.data_.resize(outer * keep * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(o * n * inner), keep * inner,
                out.data_.begin() + static_cast<std::ptrdiff_t>(o * keep * inner));
  }
  return out;
}

template <class Scalar>
void BasicTensor<Scalar>::scale_along(const std::string& label, std::span<const double> weights) {
  const std::size_t p = position(label);
  const std::size_t n = indices_[p].dim;
  if (weights.size() != n) throw ShapeError("scale_along: weight count mismatch");
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t k = 0; k < p; ++k) outer *= indices_[k].dim;
  for (std::size_t k = p + 1; k < rank(); ++k) inner *= indices_[k].dim;
  Scalar* d = data_.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights[i];
      Scalar* row = d + (o * n + i) * inner;
      for (std::size_t j = 0; j < inner; ++j) row[j] *= w;
    }
  }
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::scaled_along(const std::string& label,
                                                      std::span<const double> weights) const {
  BasicTensor out = *this;
  out.scale_along(label, weights);
  out.require_finite("scaled_along");
  return out;
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::transformed(const std::string& label,
                                                     const Matrix& m) const {
  const std::size_t p = position(label);
  if (static_cast<std::size_t>(m.rows()) != indices_[p].dim) {
    throw ShapeError("transformed: matrix rows do not match index dimension");
  }
  const auto mt = BasicTensor::from_matrix(m, label + "#in", label + "#out");
  auto out = contract(*this, mt, {{label, label + "#in"}});
  std::vector<std::string> order;
  for (std::size_t k = 0; k < rank(); ++k) {
    order.push_back(k == p ? label + "#out" : indices_[k].label);
  }
  return out.permuted(order).relabeled(label + "#out", label);
}

template <class Scalar>
typename BasicTensor<Scalar>::Matrix BasicTensor<Scalar>::to_matrix(
    const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels) const {
  std::vector<std::string> order = row_labels;
  order.insert(order.end(), col_labels.begin(), col_labels.end());
  const BasicTensor p = permuted(order);
  std::size_t nr = 1;
  for (const auto& l : row_labels) nr *= dim(l);
  const std::size_t nc = nr == 0 ? 0 : size() / nr;
  return Eigen::Map<const RowMatrix<Scalar>>(p.data_.data(), static_cast<Eigen::Index>(nr),
                                             static_cast<Eigen::Index>(nc));
}

template <class Scalar>
BasicTensor<Scalar> BasicTensor<Scalar>::conj() const {
  BasicTensor out = *this;
  if constexpr (!std::is_same_v<Scalar, double>) {
    for (auto& x : out.data_) x = std::conj(x);
  }
  return out;
}

template <class Scalar>
double BasicTensor<Scalar>::norm() const {
  double s = 0.0;
  for (const auto& x : data_) s += std::norm(x);
  return std::sqrt(s);
}

template <class Scalar>
double BasicTensor<Scalar>::max_abs() const {
  double m = 0.0;
  for (const auto& x : data_) m = std::max(m, static_cast<double>(std::abs(x)));
  return m;
}

template <class Scalar>
bool BasicTensor<Scalar>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const Scalar& x) { return is_finite(x); });
}

template <class Scalar>
BasicTensor<Scalar>& BasicTensor<Scalar>::operator*=(Scalar s) {
  for (auto& x : data_) x *= s;
  require_finite("operator*=");
  return *this;
}

template <class Scalar>
BasicTensor<Scalar>& BasicTensor<Scalar>::operator+=(const BasicTensor& other) {
  const BasicTensor o = other.permuted(labels());
  if (o.indices_ != indices_) throw ShapeError("operator+=: index mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  require_finite("operator+=");
  return *this;
}

template <class Scalar>
BasicTensor<Scalar>& BasicTensor<Scalar>::operator-=(const BasicTensor& other) {
  const BasicTensor o = other.permuted(labels());
  if (o.indices_ != indices_) throw ShapeError("operator-=: index mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  require_finite("operator-=");
  return *this;
}

template <class Scalar>
BasicTensor<Scalar> contract(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                             const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<std::string> a_free, b_free, a_sum, b_sum;
  std::size_t k = 1;
  for (const auto& [la, lb] : pairs) {
    const std::size_t da = a.dim(la);
    const std::size_t db = b.dim(lb);
    if (da != db) {
      throw ShapeError("contract: dimension mismatch on '" + la + "' (" + std::to_string(da) +
                       ") vs '" + lb + "' (" + std::to_string(db) + ")");
    }
    a_sum.push_back(la);
    b_sum.push_back(lb);
    k *= da;
  }
  std::vector<Index> out_idx;
  std::size_t m = 1;
  std::size_t n = 1;
  for (const auto& i : a.indices()) {
    if (std::find(a_sum.begin(), a_sum.end(), i.label) == a_sum.end()) {
      a_free.push_back(i.label);
      out_idx.push_back(i);
      m *= i.dim;
    }
  }
  for (const auto& i : b.indices()) {
    if (std::find(b_sum.begin(), b_sum.end(), i.label) == b_sum.end()) {
      b_free.push_back(i.label);
      out_idx.push_back(i);
      n *= i.dim;
    }
  }
  for (std::size_t i = 0; i < a_free.size(); ++i) {
    for (const auto& lb : b_free) {
      if (a_free[i] == lb) throw ShapeError("contract: duplicate result label '" + lb + "'");
    }
  }
  std::vector<std::string> a_order = a_free;
  a_order.insert(a_order.end(), a_sum.begin(), a_sum.end());
  std::vector<std::string> b_order = b_sum;
  b_order.insert(b_order.end(), b_free.begin(), b_free.end());
  const BasicTensor<Scalar> ap = a.permuted(a_order);
  const BasicTensor<Scalar> bp = b.permuted(b_order);

  std::vector<Scalar> out(m * n);
  using Map = Eigen::Map<RowMatrix<Scalar>>;
  using CMap = Eigen::Map<const RowMatrix<Scalar>>;
  const auto M = static_cast<Eigen::Index>(m);
  const auto N = static_cast<Eigen::Index>(n);
  const auto K = static_cast<Eigen::Index>(k);
  Map(out.data(), M, N).noalias() = CMap(ap.data().data(), M, K) * CMap(bp.data().data(), K, N);
  return BasicTensor<Scalar>(std::move(out_idx), std::move(out));
}

double BondWeights::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

void BondWeights::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("BondWeights: cannot normalize");
  for (double& v : values) v /= n;
}

void BondWeights::validate() const {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
      throw NumericError("BondWeights '" + label + "': non-positive entry");
    }
    if (k > 0 && values[k] > values[k - 1]) {
      throw NumericError("BondWeights '" + label + "': not sorted descending");
    }
  }
}

BondWeights BondWeights::ones(std::string label, std::size_t n) {
  return BondWeights{std::move(label), std::vector<double>(n, 1.0)};
}

template <class Scalar>
BondWeights SvdTruncation<Scalar>::weights(std::string label) const {
  BondWeights w{std::move(label), singular_values};
  w.normalize();
  return w;
}

template <class Scalar>
SvdTruncation<Scalar> svd_truncate(const BasicTensor<Scalar>& t,
                                   const std::vector<std::string>& left_labels,
                                   std::size_t max_rank, double rel_tol, const SvdLabels& labels) {
  if (t.rank() == 0) throw ShapeError("svd_truncate: empty tensor");
  if (left_labels.empty() || left_labels.size() >= t.rank()) {
    throw ShapeError("svd_truncate: left labels must be a proper nonempty subset");
  }
  if (max_rank == 0) throw ShapeError("svd_truncate: max_rank must be positive");
  std::vector<std::string> right_labels;
  std::vector<Index> left_idx, right_idx;
  for (const auto& l : left_labels) left_idx.push_back(t.index(t.position(l)));
  for (const auto& i : t.indices()) {
    if (std::find(left_labels.begin(), left_labels.end(), i.label) == left_labels.end()) {
      right_labels.push_back(i.label);
      right_idx.push_back(i);
    }
  }
  using Matrix = typename BasicTensor<Scalar>::Matrix;
  const Matrix mat = t.to_matrix(left_labels, right_labels);

  SvdTruncation<Scalar> out;
  if (mat.cwiseAbs().maxCoeff() == 0.0) return out;

  Eigen::BDCSVD<Matrix> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double numeric_floor =
      smax * static_cast<double>(std::max(mat.rows(), mat.cols())) *
      std::numeric_limits<double>::epsilon();
  std::size_t keep = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax && s(i) > numeric_floor) ++keep;
  }
  keep = std::min(keep, max_rank);
  keep = std::max<std::size_t>(keep, 1);

  double total = 0.0;
  double dropped = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    total += s(i) * s(i);
    if (static_cast<std::size_t>(i) >= keep) dropped += s(i) * s(i);
  }
  out.discarded_weight = dropped / total;

  const auto kk = static_cast<Eigen::Index>(keep);
  Matrix u = svd.matrixU().leftCols(kk);
  Matrix v = svd.matrixV().leftCols(kk).adjoint();
  for (Eigen::Index c = 0; c < kk; ++c) {
    Eigen::Index imax = 0;
    u.col(c).cwiseAbs().maxCoeff(&imax);
    const Scalar entry = u(imax, c);
    const Scalar phase = entry / std::abs(entry);
    u.col(c) *= Scalar(1) / phase;
    v.row(c) *= phase;
  }
  out.singular_values.assign(s.data(), s.data() + kk);
  out.u = BasicTensor<Scalar>::from_matrix(u, left_idx, {Index{labels.u_bond, keep}});
  out.v = BasicTensor<Scalar>::from_matrix(v, {Index{labels.v_bond, keep}}, right_idx);
  return out;
}

template class BasicTensor<double>;
template class BasicTensor<Complex>;
template struct SvdTruncation<double>;
template struct SvdTruncation<Complex>;

template RealTensor contract(const RealTensor&, const RealTensor&,
                             const std::vector<std::pair<std::string, std::string>>&);
template Tensor contract(const Tensor&, const Tensor&,
                         const std::vector<std::pair<std::string, std::string>>&);
template SvdTruncation<double> svd_truncate(const RealTensor&, const std::vector<std::string>&,
                                            std::size_t, double, const SvdLabels&);
template SvdTruncation<Complex> svd_truncate(const Tensor&, const std::vector<std::string>&,
                                             std::size_t, double, const SvdLabels&);

}  // namespace gapscan
