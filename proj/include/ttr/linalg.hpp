// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/dense.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>

namespace ttr {

struct QrResult {
  Matrix q;  ///< p x min(p,q), orthonormal columns
  Matrix r;  ///< min(p,q) x q, upper trapezoidal
};

/// Householder thin QR. Rank-deficient input is fine; R then has zero pivots.
inline QrResult qr_thin(const Eigen::Ref<const Matrix>& m) {
  const Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Matrix> qr(m);
  QrResult out;
  out.q = qr.householderQ() * Matrix::Identity(m.rows(), k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return out;
}

struct SvdResult {
  Matrix left_vectors;    ///< U, column-orthonormal
  Vector singular_values; ///< nonincreasing, nonnegative
  Matrix right_vectors;   ///< V, column-orthonormal

  Index size() const noexcept { return singular_values.size(); }

  Matrix reconstruct() const {
    return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
  }
};

/// Thin SVD computing all min(p,q) triplets.
inline SvdResult svd(const Eigen::Ref<const Matrix>& m) {
  if (!m.allFinite()) throw NumericalError("svd: input contains non-finite entries");
  SvdResult out;
  if (m.size() == 0) {
    out.left_vectors = Matrix::Zero(m.rows(), 0);
    out.singular_values = Vector::Zero(0);
    out.right_vectors = Matrix::Zero(m.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) throw NumericalError("svd: iterative kernel did not converge");
  out.left_vectors = solver.matrixU();
  out.singular_values = solver.singularValues();
  out.right_vectors = solver.matrixV();
  if (!out.singular_values.allFinite() || !out.left_vectors.allFinite() || !out.right_vectors.allFinite())
    throw NumericalError("svd: non-finite factors");
  return out;
}

/// Smallest r with sqrt(sum_{j>=r} sigma_j^2) <= delta (0-based sigma).
inline Index truncation_rank(const Eigen::Ref<const Vector>& sigma, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("truncation tolerance must be >= 0");
  const double budget = delta * delta;
  double tail = 0.0;
  Index r = sigma.size();
  // Accumulate from the smallest value up so the tail sum is accurate.
  while (r > 0) {
    const double next = tail + sigma(r - 1) * sigma(r - 1);
    if (next > budget) break;
    tail = next;
    --r;
  }
  return r;
}

struct TruncatedSvd {
  SvdResult factors;       ///< leading `rank` triplets
  Index rank = 0;
  double discarded = 0.0;  ///< Frobenius norm of the dropped tail
  Vector all_singular_values;
};

inline TruncatedSvd truncated_svd(const Eigen::Ref<const Matrix>& m, double delta) {
  SvdResult full = svd(m);
  const Index r = truncation_rank(full.singular_values, delta);
  TruncatedSvd out;
  out.rank = r;
  out.discarded = full.singular_values.tail(full.size() - r).norm();
  out.all_singular_values = full.singular_values;
  out.factors.left_vectors = full.left_vectors.leftCols(r);
  out.factors.singular_values = full.singular_values.head(r);
  out.factors.right_vectors = full.right_vectors.leftCols(r);
  return out;
}

/// Kronecker product; block (i,j) is a(i,j) * b, so the index of `b` varies fastest.
inline Matrix kron(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

}  // namespace ttr
