#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gapscan/error.hpp"

namespace gapscan {

using Complex = std::complex<double>;

struct Index {
  std::string label;
  std::size_t dim = 1;

  friend bool operator==(const Index&, const Index&) = default;
};

/// Dense tensor with labelled indices, row-major over the index order.
///
/// A tensor without indices is a scalar holding one element. Every public
/// operation that produces a new tensor checks that the entries are finite.
template <class Scalar>
class BasicTensor {
 public:
  using value_type = Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicTensor() : data_(1, Scalar{0}) {}
  explicit BasicTensor(std::vector<Index> indices);
  BasicTensor(std::vector<Index> indices, std::vector<Scalar> data);

  /// Matrix `m` as a two-index tensor with the given row and column labels.
  static BasicTensor from_matrix(const Matrix& m, std::string row_label, std::string col_label);
  /// Reshapes `m` so rows span `rows` and columns span `cols` (row-major fusion).
  static BasicTensor from_matrix(const Matrix& m, std::vector<Index> rows, std::vector<Index> cols);

  std::size_t rank() const { return indices_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<Index>& indices() const { return indices_; }
  const Index& index(std::size_t i) const { return indices_.at(i); }
  std::vector<std::string> labels() const;
  std::vector<std::size_t> dims() const;

  bool has(const std::string& label) const;
  std::size_t position(const std::string& label) const;
  std::size_t dim(const std::string& label) const { return indices_[position(label)].dim; }

  std::span<const Scalar> data() const { return data_; }
  std::span<Scalar> data() { return data_; }

  Scalar& at(std::initializer_list<std::size_t> idx);
  const Scalar& at(std::initializer_list<std::size_t> idx) const;

  BasicTensor permuted(const std::vector<std::string>& order) const;
  BasicTensor relabeled(const std::string& from, const std::string& to) const;
  BasicTensor relabeled(const std::vector<std::pair<std::string, std::string>>& renames) const;

  /// Merges `group` (in that order) into one index called `label`, placed
  /// where the first member of the group was.
  BasicTensor fused(const std::vector<std::string>& group, const std::string& label) const;
  /// Inverse of fused: replaces `label` by `parts` whose dimensions multiply to its size.
  BasicTensor split(const std::string& label, const std::vector<Index>& parts) const;
  /// Keeps the first `keep` values of index `label`.
  BasicTensor sliced(const std::string& label, std::size_t keep) const;
  /// Multiplies every slice along `label` by the matching weight.
  BasicTensor scaled_along(const std::string& label, std::span<const double> weights) const;
  void scale_along(const std::string& label, std::span<const double> weights);
  /// T'[.., k, ..] = sum_i T[.., i, ..] m(i, k), index keeps its label.
  BasicTensor transformed(const std::string& label, const Matrix& m) const;

  /// Matrix with rows fused over `row_labels` and columns over `col_labels`.
  Matrix to_matrix(const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels) const;

  BasicTensor conj() const;
  double norm() const;
  double max_abs() const;
  bool all_finite() const;

  BasicTensor& operator*=(Scalar s);
  BasicTensor& operator+=(const BasicTensor& other);
  BasicTensor& operator-=(const BasicTensor& other);
  friend BasicTensor operator*(Scalar s, BasicTensor t) { return t *= s; }
  friend BasicTensor operator+(BasicTensor a, const BasicTensor& b) { return a += b; }
  friend BasicTensor operator-(BasicTensor a, const BasicTensor& b) { return a -= b; }

  /// Throws NumericError if any entry is NaN or infinite.
  void require_finite(const char* where) const;

 private:
  void validate() const;
  std::size_t offset(std::initializer_list<std::size_t> idx) const;

  std::vector<Index> indices_;
  std::vector<Scalar> data_;
};

using Tensor = BasicTensor<Complex>;
using RealTensor = BasicTensor<double>;

/// Contracts `a` with `b` over the listed (label in a, label in b) pairs.
/// Result indices: survivors of `a` in order, then survivors of `b`.
template <class Scalar>
BasicTensor<Scalar> contract(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                             const std::vector<std::pair<std::string, std::string>>& pairs);

/// Positive bond weights (Schmidt-like values), sorted descending.
struct BondWeights {
  std::string label;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double norm() const;
  void normalize();
  /// Throws unless entries are strictly positive and non-increasing.
  void validate() const;
  static BondWeights ones(std::string label, std::size_t n);
};

struct SvdLabels {
  /// Label of the new index on U.
  std::string u_bond = "bond";
  /// Label of the new index on V.
  std::string v_bond = "bond";
};

template <class Scalar>
struct SvdTruncation {
  BasicTensor<Scalar> u;
  std::vector<double> singular_values;
  BasicTensor<Scalar> v;
  double discarded_weight = 0.0;

  std::size_t rank() const { return singular_values.size(); }
  /// Kept singular values normalized to unit Euclidean norm.
  BondWeights weights(std::string label) const;
};

/// Truncated SVD t ~ U diag(s) V with U spanning `left_labels` and V the rest.
///
/// The kept rank is min(max_rank, numerical rank, #{s > rel_tol * s_max}).
/// Each left singular vector is rotated so its largest-magnitude entry is
/// real and positive. An all-zero input returns rank 0 with empty factors.
template <class Scalar>
SvdTruncation<Scalar> svd_truncate(const BasicTensor<Scalar>& t,
                                   const std::vector<std::string>& left_labels,
                                   std::size_t max_rank, double rel_tol,
                                   const SvdLabels& labels = {});

}  // namespace gapscan
