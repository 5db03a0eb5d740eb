// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/dense.hpp"
#include "ttr/linalg.hpp"
#include "ttr/rank_vector.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ttr {

/// Vector cores are R x I x R'; matrix cores are R x I x J x R'.
enum class CoreKind { vector, matrix };
enum class Topology { train, ring };

template <CoreKind Kind>
inline constexpr Index core_order_v = Kind == CoreKind::vector ? 3 : 4;

namespace detail {

// Every algorithm below views a core as left x mode x right, where mode is the
// product of the middle dimensions. For matrix cores the (i, j) pair
// linearizes as i + I * j, which is exactly the column-major storage order.

inline Index left_rank(const DenseTensor& c) { return c.dim(0); }
inline Index right_rank(const DenseTensor& c) { return c.dim(c.order() - 1); }
inline Index mode_size(const DenseTensor& c) { return c.size() / (left_rank(c) * right_rank(c)); }

inline Shape mode_shape(const DenseTensor& c) {
  return Shape(c.shape().begin() + 1, c.shape().end() - 1);
}

using ConstMatrixMap = Eigen::Map<const Matrix>;
using ConstSlice = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;
using MutableSlice = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;

/// (left * mode) x right
inline ConstMatrixMap left_unfolding(const DenseTensor& c) {
  return {c.raw(), left_rank(c) * mode_size(c), right_rank(c)};
}

/// left x (mode * right)
inline ConstMatrixMap right_unfolding(const DenseTensor& c) {
  return {c.raw(), left_rank(c), mode_size(c) * right_rank(c)};
}

/// The left x right matrix c(:, m, :) for linear mode index m.
inline ConstSlice slice(const DenseTensor& c, Index m) {
  const Index l = left_rank(c);
  return ConstSlice(c.raw() + l * m, l, right_rank(c), Eigen::OuterStride<>(l * mode_size(c)));
}

inline MutableSlice slice(DenseTensor& c, Index m) {
  const Index l = left_rank(c);
  return MutableSlice(c.raw() + l * m, l, right_rank(c), Eigen::OuterStride<>(l * mode_size(c)));
}

inline Shape core_shape(Index left, const Shape& modes, Index right) {
  Shape s;
  s.reserve(modes.size() + 2);
  s.push_back(left);
  s.insert(s.end(), modes.begin(), modes.end());
  s.push_back(right);
  return s;
}

/// Core with the given mode shape whose column-major data is `values`.
inline DenseTensor make_core(Index left, const Shape& modes, Index right, const Eigen::Ref<const Matrix>& values) {
  std::vector<double> data(static_cast<std::size_t>(values.size()));
  Eigen::Map<Matrix>(data.data(), values.rows(), values.cols()) = values;
  return DenseTensor(core_shape(left, modes, right), std::move(data));
}

inline DenseTensor zero_core(Index left, const Shape& modes, Index right) {
  return DenseTensor::zeros(core_shape(left, modes, right));
}

template <CoreKind Kind>
void validate_cores(const std::vector<DenseTensor>& cores, Topology topology) {
  if (cores.empty()) throw ShapeError("a network needs at least one core");
  for (std::size_t k = 0; k < cores.size(); ++k) {
    if (cores[k].order() != core_order_v<Kind>)
      throw ShapeError("core " + std::to_string(k) + " has order " + std::to_string(cores[k].order()) +
                       ", expected " + std::to_string(core_order_v<Kind>));
    const auto& next = cores[(k + 1) % cores.size()];
    const bool closing = k + 1 == cores.size();
    if (closing && topology == Topology::train) continue;
    if (right_rank(cores[k]) != left_rank(next))
      throw ShapeError("rank mismatch between core " + std::to_string(k) + " and core " +
                       std::to_string((k + 1) % cores.size()) + ": " + std::to_string(right_rank(cores[k])) +
                       " vs " + std::to_string(left_rank(next)));
  }
  if (topology == Topology::train && (left_rank(cores.front()) != 1 || right_rank(cores.back()) != 1))
    throw ShapeError("train boundary ranks must be 1");
}

}  // namespace detail

/// A validated list of cores forming a train (open chain, boundary ranks 1)
/// or a ring (closed chain, R_{d+1} = R_1).
template <CoreKind Kind, Topology Topo>
class Network {
 public:
  static constexpr CoreKind kind = Kind;
  static constexpr Topology topology = Topo;

  explicit Network(std::vector<DenseTensor> cores) : cores_(std::move(cores)) {
    detail::validate_cores<Kind>(cores_, Topo);
  }

  const std::vector<DenseTensor>& cores() const noexcept { return cores_; }
  const DenseTensor& core(Index k) const { return cores_.at(static_cast<std::size_t>(k)); }
  Index order() const noexcept { return static_cast<Index>(cores_.size()); }

  RankVector ranks() const {
    std::vector<Index> r;
    r.reserve(cores_.size() + 1);
    for (const auto& c : cores_) r.push_back(detail::left_rank(c));
    r.push_back(detail::right_rank(cores_.back()));
    return RankVector(std::move(r));
  }

  /// I_k for vector cores, row dimensions for matrix cores.
  Shape dims() const {
    Shape out;
    for (const auto& c : cores_) out.push_back(c.dim(1));
    return out;
  }

  Shape col_dims() const
    requires(Kind == CoreKind::matrix)
  {
    Shape out;
    for (const auto& c : cores_) out.push_back(c.dim(2));
    return out;
  }

  /// Per-core product of the middle dimensions.
  Shape mode_sizes() const {
    Shape out;
    for (const auto& c : cores_) out.push_back(detail::mode_size(c));
    return out;
  }

  Index param_count() const {
    Index n = 0;
    for (const auto& c : cores_) n += c.size();
    return n;
  }

  bool operator==(const Network&) const = default;

 private:
  std::vector<DenseTensor> cores_;
};

template <CoreKind Kind>
using Train = Network<Kind, Topology::train>;
template <CoreKind Kind>
using Ring = Network<Kind, Topology::ring>;

using TensorTrain = Train<CoreKind::vector>;
using TrainMatrix = Train<CoreKind::matrix>;
using TensorRing = Ring<CoreKind::vector>;
using RingMatrix = Ring<CoreKind::matrix>;

namespace detail {

template <CoreKind Kind, Topology Topo>
void require_same_modes(const Network<Kind, Topo>& a, const Network<Kind, Topo>& b, const char* what) {
  if (a.order() != b.order())
    throw ShapeError(std::string(what) + ": orders differ (" + std::to_string(a.order()) + " vs " +
                     std::to_string(b.order()) + ")");
  for (Index k = 0; k < a.order(); ++k)
    if (mode_shape(a.core(k)) != mode_shape(b.core(k)))
      throw ShapeError(std::string(what) + ": mode dimensions of core " + std::to_string(k) + " differ");
}

/// Contracts a chain of cores into a (left * N) x right matrix, N being the
/// product of all mode sizes (first mode fastest).
inline Matrix chain_contract(std::span<const DenseTensor> cores) {
  Shape modes;
  for (const auto& c : cores) modes.push_back(mode_size(c));
  const Index left = left_rank(cores.front());
  Shape guard = modes;
  guard.push_back(left);
  guard.push_back(right_rank(cores.back()));
  checked_product(guard);

  Matrix w = left_unfolding(cores.front());
  for (std::size_t k = 1; k < cores.size(); ++k) {
    const auto& g = cores[k];
    Matrix next = w * right_unfolding(g);  // (left*N) x (mode*right) == (left*N*mode) x right
    w = Eigen::Map<const Matrix>(next.data(), next.rows() * mode_size(g), right_rank(g));
  }
  return w;
}

/// Interleaved (I_1,J_1,...,I_d,J_d) data to the (prod I) x (prod J) matrix.
inline DenseTensor interleaved_to_matrix(const DenseTensor& t, const Shape& rows, const Shape& cols) {
  const Index d = static_cast<Index>(rows.size());
  Shape perm;
  for (Index k = 0; k < d; ++k) perm.push_back(2 * k);
  for (Index k = 0; k < d; ++k) perm.push_back(2 * k + 1);
  DenseTensor p = permute(t, perm);
  Index nr = 1;
  Index nc = 1;
  for (Index k = 0; k < d; ++k) {
    nr *= rows[static_cast<std::size_t>(k)];
    nc *= cols[static_cast<std::size_t>(k)];
  }
  return reshape(std::move(p), Shape{nr, nc});
}

template <CoreKind Kind, Topology Topo>
Shape interleaved_shape(const Network<Kind, Topo>& net) {
  Shape s;
  for (const auto& c : net.cores()) {
    const Shape m = mode_shape(c);
    s.insert(s.end(), m.begin(), m.end());
  }
  return s;
}

/// Dense result of a chain whose modes are laid out as in `net`.
template <CoreKind Kind, Topology Topo>
DenseTensor shape_dense_result(const Network<Kind, Topo>& net, std::vector<double> data) {
  DenseTensor t(interleaved_shape(net), std::move(data));
  if constexpr (Kind == CoreKind::vector) {
    return t;
  } else {
    return interleaved_to_matrix(t, net.dims(), net.col_dims());
  }
}

/// Block placement of two cores: a shared rank must match, a stacked rank
/// concatenates with `a` first.
enum class RankJoin { shared, stacked };

inline DenseTensor join_cores(const DenseTensor& a, const DenseTensor& b, RankJoin left, RankJoin right) {
  const Index la = left_rank(a), lb = left_rank(b), ra = right_rank(a), rb = right_rank(b);
  if (left == RankJoin::shared && la != lb) throw ShapeError("shared left ranks differ");
  if (right == RankJoin::shared && ra != rb) throw ShapeError("shared right ranks differ");
  const Index l = left == RankJoin::shared ? la : la + lb;
  const Index r = right == RankJoin::shared ? ra : ra + rb;
  const Index row_off = left == RankJoin::shared ? 0 : la;
  const Index col_off = right == RankJoin::shared ? 0 : ra;
  DenseTensor out = zero_core(l, mode_shape(a), r);
  for (Index m = 0; m < mode_size(a); ++m) {
    auto s = slice(out, m);
    s.block(0, 0, la, ra) = slice(a, m);
    s.block(row_off, col_off, lb, rb) += slice(b, m);
  }
  return out;
}

/// Slice-wise Kronecker product: c(:, m, :) = kron(a(:, m, :), b(:, m, :)).
inline DenseTensor kron_core(const DenseTensor& a, const DenseTensor& b) {
  const Index l = left_rank(a) * left_rank(b);
  const Index r = right_rank(a) * right_rank(b);
  DenseTensor out = zero_core(l, mode_shape(a), r);
  for (Index m = 0; m < mode_size(a); ++m) slice(out, m) = kron(slice(a, m), slice(b, m));
  return out;
}

/// Core of the matrix product per mode pair: the combined rank index puts
/// the rank of `a` fastest, [r s] = r + s * R.
inline DenseTensor matmul_core(const DenseTensor& a, const DenseTensor& b) {
  const Index ni = a.dim(1), nj = a.dim(2), nl = b.dim(2);
  if (b.dim(1) != nj) throw ShapeError("matmul: column dimension of a does not match row dimension of b");
  const Index l = left_rank(a) * left_rank(b);
  const Index r = right_rank(a) * right_rank(b);
  DenseTensor out = zero_core(l, Shape{ni, nl}, r);
  for (Index il = 0; il < nl; ++il)
    for (Index i = 0; i < ni; ++i) {
      auto s = slice(out, i + ni * il);
      for (Index j = 0; j < nj; ++j) s += kron(slice(b, j + nj * il), slice(a, i + ni * j));
    }
  return out;
}

inline DenseTensor transpose_core(const DenseTensor& a) {
  const Index l = left_rank(a), ni = a.dim(1), nj = a.dim(2), r = right_rank(a);
  DenseTensor out = zero_core(l, Shape{nj, ni}, r);
  for (Index j = 0; j < nj; ++j)
    for (Index i = 0; i < ni; ++i) slice(out, j + nj * i) = slice(a, i + ni * j);
  return out;
}

/// QR-orthogonalizes cores [begin, end) left to right, pushing each R factor
/// into the following core. Afterwards the left unfoldings of those cores
/// have orthonormal columns.
inline void left_orthogonalize(std::vector<DenseTensor>& cores, std::size_t begin, std::size_t end) {
  for (std::size_t k = begin; k < end; ++k) {
    auto& g = cores[k];
    auto& next = cores[k + 1];
    QrResult qr = qr_thin(left_unfolding(g));
    const Index r = qr.q.cols();
    Matrix pushed = qr.r * right_unfolding(next);
    const Shape gm = mode_shape(g);
    const Shape nm = mode_shape(next);
    const Index next_right = right_rank(next);
    g = make_core(left_rank(g), gm, r, qr.q);
    next = make_core(r, nm, next_right, pushed);
  }
}

/// QR-orthogonalizes cores (first, last] right to left; the right unfoldings
/// of those cores end up with orthonormal rows.
inline void right_orthogonalize(std::vector<DenseTensor>& cores, std::size_t first, std::size_t last) {
  for (std::size_t k = last; k > first; --k) {
    auto& g = cores[k];
    auto& prev = cores[k - 1];
    QrResult qr = qr_thin(right_unfolding(g).transpose());
    const Index r = qr.q.cols();
    Matrix pulled = left_unfolding(prev) * qr.r.transpose();
    const Shape gm = mode_shape(g);
    const Shape pm = mode_shape(prev);
    const Index prev_left = left_rank(prev);
    Matrix qt = qr.q.transpose();
    g = make_core(r, gm, right_rank(g), qt);
    prev = make_core(prev_left, pm, r, pulled);
  }
}

struct SweepTruncation {
  Index rank = 0;
  Matrix kept_left;    ///< U_r (or a zero column when nothing survives)
  Vector kept_values;  ///< sigma_r
  Matrix kept_right;   ///< V_r
  double discarded = 0.0;
  Vector spectrum;     ///< all singular values, nonincreasing
};

/// delta-truncated SVD whose empty result is promoted to a single zero triplet.
inline SweepTruncation truncate(const Eigen::Ref<const Matrix>& m, double delta) {
  TruncatedSvd t = truncated_svd(m, delta);
  SweepTruncation out;
  out.discarded = t.discarded;
  out.spectrum = std::move(t.all_singular_values);
  if (t.rank == 0) {
    out.rank = 1;
    out.kept_left = Matrix::Zero(m.rows(), 1);
    out.kept_values = Vector::Zero(1);
    out.kept_right = Matrix::Zero(m.cols(), 1);
  } else {
    out.rank = t.rank;
    out.kept_left = std::move(t.factors.left_vectors);
    out.kept_values = std::move(t.factors.singular_values);
    out.kept_right = std::move(t.factors.right_vectors);
  }
  return out;
}

/// Left-to-right truncation of edges between cores k and k+1 for k in
/// [begin, end). Expects the part right of each edge to be right-orthogonal.
/// Returns the sum of squared discarded singular values.
inline double truncate_left_to_right(std::vector<DenseTensor>& cores, std::size_t begin, std::size_t end,
                                     double delta) {
  double discarded_sq = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    auto& g = cores[k];
    auto& next = cores[k + 1];
    SweepTruncation t = truncate(left_unfolding(g), delta);
    discarded_sq += t.discarded * t.discarded;
    Matrix carried = t.kept_values.asDiagonal() * t.kept_right.transpose() * right_unfolding(next);
    const Shape gm = mode_shape(g);
    const Shape nm = mode_shape(next);
    const Index next_right = right_rank(next);
    g = make_core(left_rank(g), gm, t.rank, t.kept_left);
    next = make_core(t.rank, nm, next_right, carried);
  }
  return discarded_sq;
}

/// Right-to-left truncation of the edges left of cores k = last, ..., first+1.
/// Expects cores left of each edge to be left-orthogonal, so each spectrum is
/// that of the full unfolding. `observe(k, spectrum)` sees every SVD.
template <class Observer>
double truncate_right_to_left(std::vector<DenseTensor>& cores, std::size_t first, std::size_t last, double delta,
                              Observer&& observe) {
  double discarded_sq = 0.0;
  for (std::size_t k = last; k > first; --k) {
    auto& g = cores[k];
    auto& prev = cores[k - 1];
    SweepTruncation t = truncate(right_unfolding(g), delta);
    observe(k, t.spectrum);
    discarded_sq += t.discarded * t.discarded;
    Matrix carried = left_unfolding(prev) * t.kept_left * t.kept_values.asDiagonal();
    const Shape gm = mode_shape(g);
    const Shape pm = mode_shape(prev);
    const Index prev_left = left_rank(prev);
    Matrix vt = t.kept_right.transpose();
    g = make_core(t.rank, gm, right_rank(g), vt);
    prev = make_core(prev_left, pm, t.rank, carried);
  }
  return discarded_sq;
}

inline double truncate_right_to_left(std::vector<DenseTensor>& cores, std::size_t first, std::size_t last,
                                     double delta) {
  return truncate_right_to_left(cores, first, last, delta, [](std::size_t, const Vector&) {});
}

template <CoreKind Kind, Topology Topo>
std::vector<DenseTensor> zero_cores(const Network<Kind, Topo>& like) {
  std::vector<DenseTensor> out;
  for (const auto& c : like.cores()) out.push_back(zero_core(1, mode_shape(c), 1));
  return out;
}

inline void require_tolerance(double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
}

}  // namespace detail

/// Total number of stored parameters (sum of core sizes).
template <CoreKind Kind, Topology Topo>
Index param_count(const Network<Kind, Topo>& net) {
  return net.param_count();
}

}  // namespace ttr
