// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ttr {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Upper bound on the number of entries any dense tensor may hold.
inline constexpr Index kMaxDenseEntries = 100'000'000;

/// Raised on inconsistent shapes, dimensions, splits or permutations.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a dense result would exceed kMaxDenseEntries.
class DenseSizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Raised when an iterative kernel fails or produces non-finite output.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string shape_string(std::span<const Index> shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
  os << ']';
  return os.str();
}

/// Product of `dims`, throwing DenseSizeError past kMaxDenseEntries.
inline Index checked_product(std::span<const Index> dims) {
  Index n = 1;
  for (Index d : dims) {
    if (d < 1) throw ShapeError("dimension must be >= 1, got " + std::to_string(d));
    if (n > kMaxDenseEntries / d)
      throw DenseSizeError("dense size guard exceeded for shape " + shape_string(dims));
    n *= d;
  }
  return n;
}

/// A d-way array of doubles stored column-major (first index fastest).
class DenseTensor {
 public:
  DenseTensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) throw ShapeError("dense tensor needs at least one dimension");
    const Index n = checked_product(shape_);
    if (static_cast<Index>(data_.size()) != n)
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(shape_) + " (" + std::to_string(n) + " entries)");
  }

  static DenseTensor filled(Shape shape, double value) {
    const Index n = checked_product(shape);
    return DenseTensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
  }
  static DenseTensor zeros(Shape shape) { return filled(std::move(shape), 0.0); }

  const Shape& shape() const noexcept { return shape_; }
  Index order() const noexcept { return static_cast<Index>(shape_.size()); }
  Index dim(Index k) const { return shape_.at(static_cast<std::size_t>(k)); }
  Index size() const noexcept { return static_cast<Index>(data_.size()); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const double* raw() const noexcept { return data_.data(); }
  double* raw() noexcept { return data_.data(); }

  double operator[](Index linear) const { return data_[static_cast<std::size_t>(linear)]; }
  double& operator[](Index linear) { return data_[static_cast<std::size_t>(linear)]; }

  Index linear_index(std::span<const Index> index) const {
    if (static_cast<Index>(index.size()) != order())
      throw ShapeError("index arity " + std::to_string(index.size()) + " != order " + std::to_string(order()));
    Index pos = 0;
    Index stride = 1;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
      if (index[k] < 0 || index[k] >= shape_[k]) throw ShapeError("index out of range");
      pos += index[k] * stride;
      stride *= shape_[k];
    }
    return pos;
  }

  double operator()(std::span<const Index> index) const { return (*this)[linear_index(index)]; }
  double& operator()(std::span<const Index> index) { return (*this)[linear_index(index)]; }
  double at(std::initializer_list<Index> index) const {
    return (*this)(std::span<const Index>(index.begin(), index.size()));
  }
  double& at(std::initializer_list<Index> index) {
    return (*this)(std::span<const Index>(index.begin(), index.size()));
  }

  Eigen::Map<const Vector> vec() const { return {data_.data(), size()}; }
  Eigen::Map<Vector> vec() { return {data_.data(), size()}; }

  bool operator==(const DenseTensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline DenseTensor make_dense(Shape shape, std::vector<double> data) {
  return DenseTensor(std::move(shape), std::move(data));
}

/// Same data, new shape of equal size.
inline DenseTensor reshape(DenseTensor t, Shape shape) {
  std::vector<double> data(t.data().begin(), t.data().end());
  return DenseTensor(std::move(shape), std::move(data));
}

/// Matrix whose rows run over the first `split` indices and columns over the rest.
inline Matrix unfold(const DenseTensor& t, Index split) {
  if (split < 0 || split > t.order())
    throw ShapeError("unfold split " + std::to_string(split) + " outside [0," + std::to_string(t.order()) + "]");
  Index rows = 1;
  for (Index k = 0; k < split; ++k) rows *= t.dim(k);
  // Column-major storage makes every such unfolding a reinterpretation.
  return Eigen::Map<const Matrix>(t.raw(), rows, t.size() / rows);
}

inline DenseTensor fold(const Eigen::Ref<const Matrix>& m, Shape shape, Index split) {
  if (split < 0 || split > static_cast<Index>(shape.size()))
    throw ShapeError("fold split " + std::to_string(split) + " outside the shape " + shape_string(shape));
  Index rows = 1;
  Index cols = 1;
  for (Index k = 0; k < static_cast<Index>(shape.size()); ++k) (k < split ? rows : cols) *= shape[k];
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeError("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", shape " +
                     shape_string(shape) + " at split " + std::to_string(split) + " needs " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  std::vector<double> data(static_cast<std::size_t>(rows * cols));
  Eigen::Map<Matrix>(data.data(), rows, cols) = m;
  return DenseTensor(std::move(shape), std::move(data));
}

/// Axis permutation with numpy `transpose` semantics: axis j of the result
/// is axis perm[j] of the input (indices are 0-based).
inline DenseTensor permute(const DenseTensor& t, std::span<const Index> perm) {
  const Index d = t.order();
  if (static_cast<Index>(perm.size()) != d) throw ShapeError("permutation length does not match tensor order");
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  for (Index p : perm) {
    if (p < 0 || p >= d || seen[static_cast<std::size_t>(p)]) throw ShapeError("invalid permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }

  Shape in_strides(static_cast<std::size_t>(d));
  Index stride = 1;
  for (Index k = 0; k < d; ++k) {
    in_strides[static_cast<std::size_t>(k)] = stride;
    stride *= t.dim(k);
  }
  Shape out_shape(static_cast<std::size_t>(d));
  Shape src_strides(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    out_shape[static_cast<std::size_t>(j)] = t.dim(perm[static_cast<std::size_t>(j)]);
    src_strides[static_cast<std::size_t>(j)] = in_strides[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
  }

  std::vector<double> out(static_cast<std::size_t>(t.size()));
  Shape counter(static_cast<std::size_t>(d), 0);
  Index src = 0;
  for (Index pos = 0; pos < t.size(); ++pos) {
    out[static_cast<std::size_t>(pos)] = t[src];
    for (Index j = 0; j < d; ++j) {
      auto& c = counter[static_cast<std::size_t>(j)];
      src += src_strides[static_cast<std::size_t>(j)];
      if (++c < out_shape[static_cast<std::size_t>(j)]) break;
      src -= c * src_strides[static_cast<std::size_t>(j)];
      c = 0;
    }
  }
  return DenseTensor(std::move(out_shape), std::move(out));
}

inline DenseTensor permute(const DenseTensor& t, std::initializer_list<Index> perm) {
  return permute(t, std::span<const Index>(perm.begin(), perm.size()));
}

namespace detail {
inline void require_same_shape(const DenseTensor& a, const DenseTensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}
}  // namespace detail

inline DenseTensor hadamard_dense(const DenseTensor& a, const DenseTensor& b) {
  detail::require_same_shape(a, b, "hadamard_dense");
  DenseTensor out = a;
  out.vec().array() *= b.vec().array();
  return out;
}

inline DenseTensor add_dense(const DenseTensor& a, const DenseTensor& b) {
  detail::require_same_shape(a, b, "add_dense");
  DenseTensor out = a;
  out.vec() += b.vec();
  return out;
}

inline DenseTensor scale_dense(DenseTensor t, double c) {
  t.vec() *= c;
  return t;
}

inline double fro_norm(const DenseTensor& t) { return t.vec().norm(); }

/// ||a - b||_F / ||b||_F.
inline double rel_error(const DenseTensor& a, const DenseTensor& b) {
  detail::require_same_shape(a, b, "rel_error");
  const double ref = fro_norm(b);
  if (ref == 0.0) throw std::domain_error("rel_error: reference tensor has zero norm");
  return (a.vec() - b.vec()).norm() / ref;
}

/// Views a 2-way tensor as a matrix.
inline Eigen::Map<const Matrix> as_matrix(const DenseTensor& t) {
  if (t.order() != 2) throw ShapeError("as_matrix needs a 2-way tensor, got shape " + shape_string(t.shape()));
  return {t.raw(), t.dim(0), t.dim(1)};
}

inline DenseTensor from_matrix(const Eigen::Ref<const Matrix>& m) {
  return fold(m, Shape{m.rows(), m.cols()}, 1);
}

}  // namespace ttr
