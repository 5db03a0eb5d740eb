// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/network.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace ttr {

/// TT-SVD: sequential delta-truncated SVDs of the unfoldings of `t`, with
/// delta = eps * ||t|| / sqrt(d - 1), so the result is within relative error eps.
inline TensorTrain tt_svd(const DenseTensor& t, double eps) {
  detail::require_tolerance(eps);
  const Index d = t.order();
  const double norm = fro_norm(t);
  std::vector<DenseTensor> cores;
  if (norm == 0.0) {
    for (Index k = 0; k < d; ++k) cores.push_back(detail::zero_core(1, Shape{t.dim(k)}, 1));
    return TensorTrain(std::move(cores));
  }
  const double delta = d > 1 ? eps * norm / std::sqrt(static_cast<double>(d - 1)) : 0.0;

  Matrix rest = t.vec().transpose();  // 1 x N
  Index left = 1;
  for (Index k = 0; k + 1 < d; ++k) {
    const Index n = t.dim(k);
    const Index cols = rest.size() / (left * n);
    Eigen::Map<const Matrix> m(rest.data(), left * n, cols);
    detail::SweepTruncation s = detail::truncate(m, delta);
    cores.push_back(detail::make_core(left, Shape{n}, s.rank, s.kept_left));
    rest = s.kept_values.asDiagonal() * s.kept_right.transpose();
    left = s.rank;
  }
  cores.push_back(detail::make_core(left, Shape{t.dim(d - 1)}, 1, rest));
  return TensorTrain(std::move(cores));
}

/// Dense tensor represented by a train. Matrix trains come back as a
/// (prod I) x (prod J) matrix with column-major multi-indices.
template <CoreKind Kind>
DenseTensor tt_contract(const Train<Kind>& tt) {
  Matrix full = detail::chain_contract(tt.cores());
  std::vector<double> data(full.data(), full.data() + full.size());
  return detail::shape_dense_result(tt, std::move(data));
}

/// Frobenius norm through a right-to-left QR sweep.
template <CoreKind Kind>
double tt_norm(const Train<Kind>& tt) {
  std::vector<DenseTensor> cores = tt.cores();
  detail::right_orthogonalize(cores, 0, cores.size() - 1);
  return cores.front().vec().norm();
}

/// TT-rounding: right-to-left QR orthogonalization, then a left-to-right
/// sweep of delta-truncated SVDs with delta = eps * ||tt|| / sqrt(d - 1).
template <CoreKind Kind>
Train<Kind> tt_round(const Train<Kind>& tt, double eps) {
  detail::require_tolerance(eps);
  const std::size_t d = tt.cores().size();
  if (d == 1) return tt;
  std::vector<DenseTensor> cores = tt.cores();
  detail::right_orthogonalize(cores, 0, d - 1);
  const double norm = cores.front().vec().norm();
  if (norm == 0.0) return Train<Kind>(detail::zero_cores(tt));
  const double delta = eps * norm / std::sqrt(static_cast<double>(d - 1));
  detail::truncate_left_to_right(cores, 0, d - 1, delta);
  return Train<Kind>(std::move(cores));
}

/// Sum of two trains: block-diagonal interior cores, first core joined along
/// its right rank and last core along its left rank.
template <CoreKind Kind>
Train<Kind> tt_add(const Train<Kind>& a, const Train<Kind>& b) {
  detail::require_same_modes(a, b, "tt_add");
  using detail::RankJoin;
  const Index d = a.order();
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < d; ++k) {
    const RankJoin left = k == 0 ? RankJoin::shared : RankJoin::stacked;
    const RankJoin right = k == d - 1 ? RankJoin::shared : RankJoin::stacked;
    cores.push_back(detail::join_cores(a.core(k), b.core(k), left, right));
  }
  return Train<Kind>(std::move(cores));
}

template <CoreKind Kind>
Train<Kind> tt_scale(const Train<Kind>& tt, double c) {
  std::vector<DenseTensor> cores = tt.cores();
  cores.front() = scale_dense(std::move(cores.front()), c);
  return Train<Kind>(std::move(cores));
}

/// Rank-1 train of the all-ones tensor.
inline TensorTrain tt_ones(const Shape& dims) {
  std::vector<DenseTensor> cores;
  for (Index n : dims) cores.push_back(DenseTensor::filled(Shape{1, n, 1}, 1.0));
  return TensorTrain(std::move(cores));
}

/// Elementwise product via slice-wise Kronecker products; ranks multiply.
template <CoreKind Kind>
Train<Kind> tt_hadamard(const Train<Kind>& a, const Train<Kind>& b) {
  detail::require_same_modes(a, b, "tt_hadamard");
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < a.order(); ++k) cores.push_back(detail::kron_core(a.core(k), b.core(k)));
  return Train<Kind>(std::move(cores));
}

/// Same result as tt_round(tt_hadamard(a, b), eps), without materializing the
/// product cores. A left-to-right sweep applies each Kronecker core to the
/// running R factor and QR-orthogonalizes; a right-to-left truncation sweep
/// follows. Peak memory is bounded by the orthogonalized ranks instead of
/// the product ranks.
template <CoreKind Kind>
Train<Kind> tt_hadamard_rounded(const Train<Kind>& a, const Train<Kind>& b, double eps) {
  detail::require_same_modes(a, b, "tt_hadamard_rounded");
  detail::require_tolerance(eps);
  const Index d = a.order();
  std::vector<DenseTensor> cores;
  // carry is rc x (rb * ra), the b index fastest to match kron(a, b).
  Matrix carry = Matrix::Ones(1, 1);
  for (Index k = 0; k < d; ++k) {
    const DenseTensor& ca = a.core(k);
    const DenseTensor& cb = b.core(k);
    const Index ra = detail::left_rank(ca), ra2 = detail::right_rank(ca);
    const Index rb = detail::left_rank(cb), rb2 = detail::right_rank(cb);
    const Index rc = carry.rows();
    const Index n = detail::mode_size(ca);
    Matrix next(rc * n, rb2 * ra2);
    const Eigen::Map<const Matrix> by_a(carry.data(), rc * rb, ra);
    for (Index m = 0; m < n; ++m) {
      const Matrix partial = by_a * detail::slice(ca, m);  // (rc*rb) x ra2
      const auto sb = detail::slice(cb, m);
      for (Index col = 0; col < ra2; ++col) {
        const Eigen::Map<const Matrix> block(partial.col(col).data(), rc, rb);
        next.block(rc * m, rb2 * col, rc, rb2).noalias() = block * sb;
      }
    }
    const Shape modes = detail::mode_shape(ca);
    if (k + 1 < d) {
      QrResult qr = qr_thin(next);
      cores.push_back(detail::make_core(rc, modes, qr.q.cols(), qr.q));
      carry = std::move(qr.r);
    } else {
      cores.push_back(detail::make_core(rc, modes, 1, next));
    }
  }
  if (d == 1) return Train<Kind>(std::move(cores));
  const double norm = cores.back().vec().norm();
  if (norm == 0.0) return Train<Kind>(detail::zero_cores(a));
  const double delta = eps * norm / std::sqrt(static_cast<double>(d - 1));
  detail::truncate_right_to_left(cores, 0, static_cast<std::size_t>(d - 1), delta);
  return Train<Kind>(std::move(cores));
}

/// Matrix product of two matrix trains; ranks multiply.
inline TrainMatrix tt_matmul(const TrainMatrix& a, const TrainMatrix& b) {
  if (a.order() != b.order()) throw ShapeError("tt_matmul: orders differ");
  if (a.col_dims() != b.dims()) throw ShapeError("tt_matmul: column dims of a do not match row dims of b");
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < a.order(); ++k) cores.push_back(detail::matmul_core(a.core(k), b.core(k)));
  return TrainMatrix(std::move(cores));
}

inline TrainMatrix tt_transpose(const TrainMatrix& a) {
  std::vector<DenseTensor> cores;
  for (const auto& c : a.cores()) cores.push_back(detail::transpose_core(c));
  return TrainMatrix(std::move(cores));
}

template <CoreKind Kind>
Index tt_param_count(const Train<Kind>& tt) {
  return tt.param_count();
}

/// Evaluates sum_p coeffs[p] * x^{(Hadamard) p} by Horner's rule, rounding
/// after every product and sum at tolerance eps. The overall error is
/// therefore roughly (number of steps) * eps.
inline TensorTrain series_apply(const TensorTrain& x, std::span<const double> coeffs, double eps) {
  if (coeffs.empty()) throw std::invalid_argument("series_apply needs at least one coefficient");
  detail::require_tolerance(eps);
  const TensorTrain ones = tt_ones(x.dims());
  TensorTrain acc = tt_scale(ones, coeffs.back());
  for (std::size_t p = coeffs.size() - 1; p-- > 0;) {
    acc = tt_round(tt_hadamard(acc, x), eps);
    acc = tt_round(tt_add(acc, tt_scale(ones, coeffs[p])), eps);
  }
  return acc;
}

}  // namespace ttr
