// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/network.hpp"
#include "ttr/random.hpp"
#include "ttr/tt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace ttr {

namespace detail {

inline std::vector<DenseTensor> random_cores(const std::vector<Shape>& modes, const RankVector& ranks,
                                             std::uint64_t seed) {
  if (ranks.order() != static_cast<Index>(modes.size()))
    throw ShapeError("rank vector order " + std::to_string(ranks.order()) + " does not match " +
                     std::to_string(modes.size()) + " cores");
  NormalSampler sample(seed);
  std::vector<DenseTensor> cores;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    DenseTensor c = zero_core(ranks[static_cast<Index>(k)], modes[k], ranks[static_cast<Index>(k) + 1]);
    for (double& v : c.data()) v = sample();
    cores.push_back(std::move(c));
  }
  return cores;
}

inline std::vector<DenseTensor> rotate(std::vector<DenseTensor> cores, Index s) {
  const Index d = static_cast<Index>(cores.size());
  s = ((s % d) + d) % d;
  std::rotate(cores.begin(), cores.begin() + s, cores.end());
  return cores;
}

/// Flop estimate for contracting cores [0, m) and [m, d) separately and
/// joining them with one matrix product.
inline double split_contract_cost(std::span<const DenseTensor> cores, std::size_t m) {
  const double r0 = static_cast<double>(left_rank(cores.front()));
  double cost = 0.0;
  double prefix = 1.0;
  double n_left = 1.0;
  for (std::size_t k = 0; k < cores.size(); ++k) {
    if (k == m) {
      n_left = prefix;
      prefix = 1.0;
    }
    const double l = static_cast<double>(left_rank(cores[k]));
    const double n = static_cast<double>(mode_size(cores[k]));
    const double r = static_cast<double>(right_rank(cores[k]));
    const double outer = k < m ? r0 : static_cast<double>(left_rank(cores[m]));
    cost += outer * prefix * l * n * r;
    prefix *= n;
  }
  const double rm = static_cast<double>(left_rank(cores[m]));
  return cost + n_left * prefix * r0 * rm;
}

inline std::size_t best_split(std::span<const DenseTensor> cores) {
  std::size_t best = 1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m < cores.size(); ++m) {
    const double c = split_contract_cost(cores, m);
    if (c < best_cost) {
      best_cost = c;
      best = m;
    }
  }
  return best;
}

/// Dense data of the ring (modes in core order, first mode fastest):
/// entry = Trace(G_1(i_1) ... G_d(i_d)).
inline std::vector<double> ring_contract_data(std::span<const DenseTensor> cores) {
  Shape modes;
  for (const auto& c : cores) modes.push_back(mode_size(c));
  const Index total = checked_product(modes);
  std::vector<double> out(static_cast<std::size_t>(total));
  if (cores.size() == 1) {
    for (Index m = 0; m < total; ++m) out[static_cast<std::size_t>(m)] = slice(cores.front(), m).trace();
    return out;
  }
  const std::size_t m = best_split(cores);
  const Index r0 = left_rank(cores.front());
  const Index rm = left_rank(cores[m]);
  // left(a, x, b) and right(b, y, a); C(x, y) = sum_{a,b} left(a,x,b) right(b,y,a)
  const Matrix left = chain_contract(cores.subspan(0, m));
  const Matrix right = chain_contract(cores.subspan(m));
  const Index n_left = left.rows() / r0;
  const Index n_right = right.rows() / rm;
  const DenseTensor lt(Shape{r0, n_left, rm}, std::vector<double>(left.data(), left.data() + left.size()));
  const DenseTensor rt(Shape{rm, n_right, r0}, std::vector<double>(right.data(), right.data() + right.size()));
  const DenseTensor lp = permute(lt, {1, 2, 0});  // (x, b, a)
  const DenseTensor rp = permute(rt, {0, 2, 1});  // (b, a, y)
  Eigen::Map<Matrix>(out.data(), n_left, n_right).noalias() =
      Eigen::Map<const Matrix>(lp.raw(), n_left, rm * r0) * Eigen::Map<const Matrix>(rp.raw(), rm * r0, n_right);
  return out;
}

inline double transfer_cost(std::span<const DenseTensor> cores, Index boundary) {
  double per_pair = 0.0;
  for (const auto& c : cores) {
    const double l = static_cast<double>(left_rank(c));
    const double r = static_cast<double>(right_rank(c));
    per_pair += static_cast<double>(mode_size(c)) * (l * l * r + l * r * r);
  }
  const double b = static_cast<double>(boundary);
  return 0.5 * b * (b + 1.0) * per_pair;
}

/// ||ring||^2 = sum over boundary pairs (r, s) of Y_rs(r, s), where Y starts as
/// e_r e_s^T and every core maps Y -> sum_i G(i)^T Y G(i). The boundary is
/// placed on the smallest rank.
inline double transfer_norm_sq(std::span<const DenseTensor> input) {
  Index boundary = 0;
  for (std::size_t k = 1; k < input.size(); ++k)
    if (left_rank(input[k]) < left_rank(input[static_cast<std::size_t>(boundary)])) boundary = static_cast<Index>(k);
  const std::vector<DenseTensor> cores =
      rotate(std::vector<DenseTensor>(input.begin(), input.end()), boundary);
  const Index r0 = left_rank(cores.front());
  double total = 0.0;
  for (Index r = 0; r < r0; ++r) {
    for (Index s = r; s < r0; ++s) {
      Matrix y = Matrix::Zero(r0, r0);
      y(r, s) = 1.0;
      for (const auto& g : cores) {
        Matrix next = Matrix::Zero(right_rank(g), right_rank(g));
        for (Index m = 0; m < mode_size(g); ++m) {
          const auto gs = slice(g, m);
          next.noalias() += gs.transpose() * (y * gs);
        }
        y = std::move(next);
      }
      total += (r == s ? 1.0 : 2.0) * y(r, s);
    }
  }
  return std::max(total, 0.0);
}

}  // namespace detail

/// Ring with i.i.d. standard-normal core entries, filled core by core in
/// storage order from one seeded stream.
inline TensorRing tr_random(const Shape& dims, const RankVector& ranks, std::uint64_t seed) {
  std::vector<Shape> modes;
  for (Index n : dims) modes.push_back(Shape{n});
  return TensorRing(detail::random_cores(modes, ranks, seed));
}

inline RingMatrix ring_matrix_random(const Shape& row_dims, const Shape& col_dims, const RankVector& ranks,
                                     std::uint64_t seed) {
  if (row_dims.size() != col_dims.size()) throw ShapeError("row and column dims differ in length");
  std::vector<Shape> modes;
  for (std::size_t k = 0; k < row_dims.size(); ++k) modes.push_back(Shape{row_dims[k], col_dims[k]});
  return RingMatrix(detail::random_cores(modes, ranks, seed));
}

/// Dense tensor of a ring: entry (i_1..i_d) = Trace(G_1(:,i_1,:) ... G_d(:,i_d,:)).
inline DenseTensor tr_contract(const TensorRing& tr) {
  return detail::shape_dense_result(tr, detail::ring_contract_data(tr.cores()));
}

/// (prod I) x (prod J) matrix of a ring matrix; row and column multi-indices
/// are linearized column-major.
inline DenseTensor ring_matrix_contract(const RingMatrix& rm) {
  return detail::shape_dense_result(rm, detail::ring_contract_data(rm.cores()));
}

/// Rotates the cores so that core s becomes the first. The result represents
/// the tensor with its indices cyclically permuted the same way.
template <CoreKind Kind>
Ring<Kind> cyclic_shift(const Ring<Kind>& tr, Index s) {
  return Ring<Kind>(detail::rotate(tr.cores(), s));
}

/// Frobenius norm. Uses the transfer-operator recursion, or the dense
/// contraction when that is cheaper and fits under the size guard.
template <CoreKind Kind>
double tr_norm(const Ring<Kind>& tr) {
  const auto& cores = tr.cores();
  Index boundary = tr.ranks()[0];
  for (Index k = 0; k < tr.order(); ++k) boundary = std::min(boundary, tr.ranks()[k]);
  const double transfer = detail::transfer_cost(cores, boundary);

  Shape modes = tr.mode_sizes();
  double dense_entries = 1.0;
  for (Index n : modes) dense_entries *= static_cast<double>(n);
  if (cores.size() > 1 && dense_entries <= static_cast<double>(kMaxDenseEntries)) {
    const double dense = detail::split_contract_cost(cores, detail::best_split(cores));
    if (dense < transfer) {
      try {
        const std::vector<double> data = detail::ring_contract_data(cores);
        return Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size())).norm();
      } catch (const DenseSizeError&) {
        // intermediates too large; fall through
      }
    }
  }
  return std::sqrt(detail::transfer_norm_sq(cores));
}

template <CoreKind Kind>
Index tr_param_count(const Ring<Kind>& tr) {
  return tr.param_count();
}

/// Ring sum with every core slice block-diagonal; all ranks add.
template <CoreKind Kind>
Ring<Kind> tr_add_naive(const Ring<Kind>& a, const Ring<Kind>& b) {
  detail::require_same_modes(a, b, "tr_add_naive");
  using detail::RankJoin;
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < a.order(); ++k)
    cores.push_back(detail::join_cores(a.core(k), b.core(k), RankJoin::stacked, RankJoin::stacked));
  return Ring<Kind>(std::move(cores));
}

/// Two consecutive cores (0-based); `second` follows `first` in the ring.
struct CorePair {
  Index first = 0;
  Index second = 0;
};

/// Ring sum that treats the two cores around one edge as train end cores:
/// the first of them is joined along its right rank, the second along its
/// left rank, and the edge between them keeps its (shared) rank. Defaults to
/// the edge closing the ring, between the last and the first core.
template <CoreKind Kind>
Ring<Kind> tr_add_modified(const Ring<Kind>& a, const Ring<Kind>& b, std::optional<CorePair> cut = std::nullopt) {
  detail::require_same_modes(a, b, "tr_add_modified");
  const Index d = a.order();
  const CorePair c = cut.value_or(CorePair{d - 1, 0});
  if (c.first < 0 || c.first >= d || c.second != (c.first + 1) % d)
    throw ShapeError("tr_add_modified: cut cores (" + std::to_string(c.first) + "," + std::to_string(c.second) +
                     ") are not consecutive");
  const Index edge = c.second;
  if (a.ranks()[edge] != b.ranks()[edge])
    throw ShapeError("tr_add_modified: ranks on the cut edge differ (" + std::to_string(a.ranks()[edge]) + " vs " +
                     std::to_string(b.ranks()[edge]) + ")");
  using detail::RankJoin;
  const auto ra = detail::rotate(a.cores(), edge);
  const auto rb = detail::rotate(b.cores(), edge);
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < d; ++k) {
    const RankJoin left = k == 0 ? RankJoin::shared : RankJoin::stacked;
    const RankJoin right = k == d - 1 ? RankJoin::shared : RankJoin::stacked;
    const auto i = static_cast<std::size_t>(k);
    cores.push_back(detail::join_cores(ra[i], rb[i], left, right));
  }
  return Ring<Kind>(detail::rotate(std::move(cores), d - edge));
}

/// Elementwise product via slice-wise Kronecker products; ranks multiply.
template <CoreKind Kind>
Ring<Kind> tr_hadamard(const Ring<Kind>& a, const Ring<Kind>& b) {
  detail::require_same_modes(a, b, "tr_hadamard");
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < a.order(); ++k) cores.push_back(detail::kron_core(a.core(k), b.core(k)));
  return Ring<Kind>(std::move(cores));
}

/// Core-wise matrix product; combined ranks [r s] = r + s * R_a.
inline RingMatrix tr_matmul(const RingMatrix& a, const RingMatrix& b) {
  if (a.order() != b.order()) throw ShapeError("tr_matmul: orders differ");
  if (a.col_dims() != b.dims()) throw ShapeError("tr_matmul: column dims of a do not match row dims of b");
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < a.order(); ++k) cores.push_back(detail::matmul_core(a.core(k), b.core(k)));
  return RingMatrix(std::move(cores));
}

inline RingMatrix tr_transpose(const RingMatrix& a) {
  std::vector<DenseTensor> cores;
  for (const auto& c : a.cores()) cores.push_back(detail::transpose_core(c));
  return RingMatrix(std::move(cores));
}

namespace detail {

/// TR-rounding with the ring edge R_1 held as a grouped boundary index.
///
///  1. delta = eps * ||tr|| / sqrt(d * R_1).
///  2. QR-orthogonalize cores 0..d-2 left to right; core 0 is unfolded as
///     (R_1 * I_1) x R_2, so R_1 rides along as a row index.
///  3. delta-truncated SVDs of the right unfoldings of cores d-1..1 (the last
///     one is R_d x (I_d * R_1)).
///  4. Rotate by one so R_2 becomes the boundary, re-orthogonalize, and
///     truncate the former ring edge with the remaining error budget.
///
/// Truncating the grouped object by tau changes the ring by at most
/// sqrt(boundary rank) * tau, which is what the budget accounts for.
/// `observe(core, spectrum)` receives every SVD spectrum; core 0 is seen in
/// step 4.
template <CoreKind Kind, class Observer>
Ring<Kind> ring_round(const Ring<Kind>& tr, double eps, Observer&& observe) {
  require_tolerance(eps);
  const std::size_t d = tr.cores().size();
  if (d == 1) return tr;
  const double norm = tr_norm(tr);
  if (norm == 0.0) return Ring<Kind>(zero_cores(tr));
  const Index r1 = tr.ranks()[0];
  const double delta = eps * norm / std::sqrt(static_cast<double>(d) * static_cast<double>(r1));

  std::vector<DenseTensor> cores = tr.cores();
  left_orthogonalize(cores, 0, d - 1);
  const double swept_sq = truncate_right_to_left(cores, 0, d - 1, delta, observe);

  std::vector<DenseTensor> shifted = rotate(std::move(cores), 1);
  left_orthogonalize(shifted, 0, d - 1);
  const double budget = std::max(0.0, eps * norm - std::sqrt(static_cast<double>(r1) * swept_sq));
  const double last_delta = budget / std::sqrt(static_cast<double>(left_rank(shifted.front())));
  truncate_right_to_left(shifted, d - 2, d - 1, last_delta,
                         [&](std::size_t, const Vector& spectrum) { observe(std::size_t{0}, spectrum); });
  return Ring<Kind>(rotate(std::move(shifted), static_cast<Index>(d) - 1));
}

}  // namespace detail

/// Rounds a ring to within relative Frobenius error eps; ranks never grow.
template <CoreKind Kind>
Ring<Kind> tr_round(const Ring<Kind>& tr, double eps) {
  return detail::ring_round(tr, eps, [](std::size_t, const Vector&) {});
}

/// Train obtained by cutting the ring at edge `cut_edge` (the left rank of
/// that core): the sum over that index of the trains obtained by fixing it,
/// assembled as repeated train addition would. The train represents the
/// ring's tensor with indices rotated so that core `cut_edge` comes first.
template <CoreKind Kind>
Train<Kind> tr_to_tt(const Ring<Kind>& tr, Index cut_edge = 0) {
  const Index d = tr.order();
  if (cut_edge < 0 || cut_edge >= d)
    throw ShapeError("tr_to_tt: edge " + std::to_string(cut_edge) + " outside [0," + std::to_string(d) + ")");
  const auto cores = detail::rotate(tr.cores(), cut_edge);
  const Index p = detail::left_rank(cores.front());
  std::vector<DenseTensor> out;

  if (d == 1) {
    const auto& g = cores.front();
    DenseTensor c = detail::zero_core(1, detail::mode_shape(g), 1);
    for (Index m = 0; m < detail::mode_size(g); ++m) c[m] = detail::slice(g, m).trace();
    out.push_back(std::move(c));
    return Train<Kind>(std::move(out));
  }

  {
    const auto& g = cores.front();
    const Index r = detail::right_rank(g);
    DenseTensor c = detail::zero_core(1, detail::mode_shape(g), r * p);
    for (Index m = 0; m < detail::mode_size(g); ++m) {
      auto s = detail::slice(c, m);
      const auto gs = detail::slice(g, m);
      for (Index a = 0; a < p; ++a) s.block(0, r * a, 1, r) = gs.row(a);
    }
    out.push_back(std::move(c));
  }
  for (Index k = 1; k + 1 < d; ++k) {
    const auto& g = cores[static_cast<std::size_t>(k)];
    const Index l = detail::left_rank(g), r = detail::right_rank(g);
    DenseTensor c = detail::zero_core(l * p, detail::mode_shape(g), r * p);
    for (Index m = 0; m < detail::mode_size(g); ++m) {
      auto s = detail::slice(c, m);
      const auto gs = detail::slice(g, m);
      for (Index a = 0; a < p; ++a) s.block(l * a, r * a, l, r) = gs;
    }
    out.push_back(std::move(c));
  }
  {
    const auto& g = cores.back();
    const Index l = detail::left_rank(g);
    DenseTensor c = detail::zero_core(l * p, detail::mode_shape(g), 1);
    for (Index m = 0; m < detail::mode_size(g); ++m) {
      auto s = detail::slice(c, m);
      const auto gs = detail::slice(g, m);
      for (Index a = 0; a < p; ++a) s.block(l * a, 0, l, 1) = gs.col(a);
    }
    out.push_back(std::move(c));
  }
  return Train<Kind>(std::move(out));
}

/// Ring representing the same tensor as `tt` with R_1 = target_r1.
///
/// target_r1 = 1 reuses the cores unchanged. Otherwise the first train rank
/// r_2 is split as (r_1, r_2') with r_1 fastest (zero-padded up to a multiple
/// of target_r1); r_1 becomes the ring edge and is carried block-diagonally
/// through cores 2..d, giving ranks (p, ceil(r_2/p), p r_3, ..., p r_d, p).
/// No truncation is involved, so the result is exact.
template <CoreKind Kind>
Ring<Kind> tt_to_tr(const Train<Kind>& tt, Index target_r1 = 1) {
  const Index d = tt.order();
  if (target_r1 < 1) throw ShapeError("tt_to_tr: infeasible target_R1 " + std::to_string(target_r1));
  if (target_r1 == 1) return Ring<Kind>(tt.cores());
  const Index p = target_r1;
  std::vector<DenseTensor> out;
  if (d == 1) {
    // trace((g / p) * I_p) = g
    const auto& g = tt.core(0);
    DenseTensor c = detail::zero_core(p, detail::mode_shape(g), p);
    for (Index m = 0; m < detail::mode_size(g); ++m)
      detail::slice(c, m) = Matrix::Identity(p, p) * (g[m] / static_cast<double>(p));
    out.push_back(std::move(c));
    return Ring<Kind>(std::move(out));
  }
  const Index r2 = detail::right_rank(tt.core(0));
  const Index q = (r2 + p - 1) / p;
  {
    const auto& g = tt.core(0);
    DenseTensor c = detail::zero_core(p, detail::mode_shape(g), q);
    for (Index m = 0; m < detail::mode_size(g); ++m) {
      auto s = detail::slice(c, m);
      const auto gs = detail::slice(g, m);
      for (Index y = 0; y < q; ++y)
        for (Index a = 0; a < p && a + p * y < r2; ++a) s(a, y) = gs(0, a + p * y);
    }
    out.push_back(std::move(c));
  }
  {
    const auto& g = tt.core(1);
    const Index r3 = detail::right_rank(g);
    const bool last = d == 2;
    DenseTensor c = detail::zero_core(q, detail::mode_shape(g), last ? p : r3 * p);
    for (Index m = 0; m < detail::mode_size(g); ++m) {
      auto s = detail::slice(c, m);
      const auto gs = detail::slice(g, m);
      for (Index a = 0; a < p; ++a)
        for (Index y = 0; y < q && a + p * y < r2; ++y) {
          if (last) {
            s(y, a) = gs(a + p * y, 0);
          } else {
            s.block(y, r3 * a, 1, r3) = gs.row(a + p * y);
          }
        }
    }
    out.push_back(std::move(c));
  }
  for (Index k = 2; k + 1 < d; ++k) {
    const auto& g = tt.core(k);
    const Index l = detail::left_rank(g), r = detail::right_rank(g);
    DenseTensor c = detail::zero_core(l * p, detail::mode_shape(g), r * p);
    for (Index m = 0; m < detail::mode_size(g); ++m) {
      auto s = detail::slice(c, m);
      const auto gs = detail::slice(g, m);
      for (Index a = 0; a < p; ++a) s.block(l * a, r * a, l, r) = gs;
    }
    out.push_back(std::move(c));
  }
  if (d > 2) {
    const auto& g = tt.core(d - 1);
    const Index l = detail::left_rank(g);
    DenseTensor c = detail::zero_core(l * p, detail::mode_shape(g), p);
    for (Index m = 0; m < detail::mode_size(g); ++m) {
      auto s = detail::slice(c, m);
      const auto gs = detail::slice(g, m);
      for (Index a = 0; a < p; ++a) s.block(l * a, a, l, 1) = gs;
    }
    out.push_back(std::move(c));
  }
  return Ring<Kind>(std::move(out));
}

}  // namespace ttr
