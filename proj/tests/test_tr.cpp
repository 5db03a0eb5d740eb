// SPDX-License-Identifier: Apache-2.0
#include "oracle.hpp"
#include "ttr/tr.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ttr;

namespace {

TensorRing random_ring(oracle::Gaussian& g, const Shape& dims, const std::vector<Index>& ranks) {
  std::vector<Shape> modes;
  for (Index n : dims) modes.push_back({n});
  return TensorRing(g.cores(modes, ranks));
}

RingMatrix random_ring_matrix(oracle::Gaussian& g, const Shape& rows, const Shape& cols,
                              const std::vector<Index>& ranks) {
  std::vector<Shape> modes;
  for (std::size_t k = 0; k < rows.size(); ++k) modes.push_back({rows[k], cols[k]});
  return RingMatrix(g.cores(modes, ranks));
}

TensorRing random_ring(oracle::Gaussian& g) {
  const oracle::RandomShape s = oracle::random_shape(g, false, false);
  return TensorRing(g.cores(s.modes, s.ranks));
}

DenseTensor dense(const TensorRing& x) { return oracle::contract(x.cores()); }
DenseTensor dense(const RingMatrix& x) { return oracle::contract(x.cores()); }

/// Core with identity slices for every (i, i) pair, ranks 1.
DenseTensor identity_core(Index n) {
  DenseTensor c = DenseTensor::zeros({1, n, n, 1});
  for (Index i = 0; i < n; ++i) c.at({0, i, i, 0}) = 1.0;
  return c;
}

}  // namespace

TEST(TensorRing, ValidatesChaining) {
  oracle::Gaussian g(1);
  EXPECT_THROW(TensorRing(g.cores({{2}, {2}}, {2, 3, 4})), ShapeError);
  EXPECT_NO_THROW(TensorRing(g.cores({{2}, {2}}, {2, 3, 2})));
  EXPECT_THROW(RingMatrix(g.cores({{2}, {2}}, {2, 3, 2})), ShapeError);
}

TEST(RankVectorTest, Invariants) {
  EXPECT_THROW(RankVector({2, 3, 4}), ShapeError);
  EXPECT_THROW(RankVector({0, 0}), ShapeError);
  EXPECT_THROW(RankVector({1}), ShapeError);
  const RankVector a({2, 3, 2}), b({2, 4, 2});
  EXPECT_TRUE(elementwise_leq(a, b));
  EXPECT_FALSE(elementwise_leq(b, a));
  EXPECT_FALSE(elementwise_leq(RankVector({1, 5, 1}), RankVector({2, 4, 2})));
  EXPECT_FALSE(elementwise_leq(RankVector({2, 4, 2}), RankVector({1, 5, 1})));
  EXPECT_EQ(elementwise_product(a, b), RankVector({4, 12, 4}));
  EXPECT_EQ(elementwise_sum(a, b), RankVector({4, 7, 4}));
  EXPECT_EQ(a.to_string(), "(2,3,2)");
}

TEST(TrRandom, DeterministicWithShapes) {
  const TensorRing a = tr_random({6, 6, 6, 6}, RankVector::uniform(4, 3), 42);
  const TensorRing b = tr_random({6, 6, 6, 6}, RankVector::uniform(4, 3), 42);
  EXPECT_EQ(a, b);
  for (const auto& c : a.cores()) EXPECT_EQ(c.shape(), (Shape{3, 6, 3}));
  EXPECT_NE(a, tr_random({6, 6, 6, 6}, RankVector::uniform(4, 3), 43));
  EXPECT_THROW(tr_random({6, 6}, RankVector::uniform(3, 3), 1), ShapeError);
}

TEST(TrRandom, StandardNormalMoments) {
  const TensorRing a = tr_random({10, 10, 10, 10}, RankVector::uniform(4, 50), 7);
  double n = 0, sum = 0, sq = 0;
  for (const auto& c : a.cores())
    for (double x : c.data()) {
      n += 1;
      sum += x;
      sq += x * x;
    }
  ASSERT_GE(n, 1e5);
  const double mean = sum / n;
  EXPECT_LE(std::abs(mean), 0.02);
  EXPECT_LE(std::abs(sq / n - mean * mean - 1.0), 0.05);
}

TEST(TrContract, UnitRanksMultiplyScalars) {
  oracle::Gaussian g(2);
  const TensorRing x = random_ring(g, {3, 2, 4}, {1, 1, 1, 1});
  const DenseTensor t = tr_contract(x);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 2; ++j)
      for (Index k = 0; k < 4; ++k)
        EXPECT_DOUBLE_EQ(t.at({i, j, k}), x.core(0)[i] * x.core(1)[j] * x.core(2)[k]);
}

TEST(TrContract, ExhaustiveNestedSum) {
  oracle::Gaussian g(3);
  for (int trial = 0; trial < 20; ++trial) {
    const TensorRing x = random_ring(g, {2, 2, 2}, {2, 2, 2, 2});
    const DenseTensor t = tr_contract(x);
    for (Index a = 0; a < 2; ++a)
      for (Index b = 0; b < 2; ++b)
        for (Index c = 0; c < 2; ++c) {
          const double want = oracle::ring_entry_bruteforce(x.cores(), {a, b, c}, {0, 0, 0});
          EXPECT_NEAR(t.at({a, b, c}), want, 1e-13 * std::max(1.0, std::abs(want)));
        }
  }
}

TEST(TrContract, MatchesOracleOnRandomRings) {
  oracle::Gaussian g(4);
  for (int trial = 0; trial < 30; ++trial) {
    const TensorRing x = random_ring(g);
    EXPECT_LE(oracle::rel_diff(tr_contract(x), dense(x)), 1e-12);
  }
}

TEST(TrContract, SingleCoreIsSliceTrace) {
  oracle::Gaussian g(5);
  const TensorRing x = random_ring(g, {4}, {3, 3});
  const DenseTensor t = tr_contract(x);
  for (Index i = 0; i < 4; ++i) {
    double tr = 0;
    for (Index a = 0; a < 3; ++a) tr += x.core(0).at({a, i, a});
    EXPECT_NEAR(t[i], tr, 1e-14);
  }
}

TEST(RingMatrixContract, UnitRankIdentityIsKroneckerIdentity) {
  const RingMatrix eye({identity_core(2), identity_core(3)});
  EXPECT_EQ(ring_matrix_contract(eye), from_matrix(Matrix::Identity(6, 6)));
}

TEST(RingMatrixContract, ExhaustivePairedNestedSum) {
  oracle::Gaussian g(6);
  const RingMatrix x = random_ring_matrix(g, {2, 2, 2}, {2, 2, 2}, {2, 2, 2, 2});
  const DenseTensor m = ring_matrix_contract(x);
  ASSERT_EQ(m.shape(), (Shape{8, 8}));
  std::vector<Index> i(3, 0);
  Index row = 0;
  do {
    std::vector<Index> j(3, 0);
    Index col = 0;
    do {
      const double want = oracle::ring_entry_bruteforce(x.cores(), i, j);
      EXPECT_NEAR(m.at({row, col}), want, 1e-13 * std::max(1.0, std::abs(want)));
      ++col;
    } while (oracle::next_index(j, {2, 2, 2}));
    ++row;
  } while (oracle::next_index(i, {2, 2, 2}));
}

TEST(CyclicShift, TrivialShiftsAndRankRotation) {
  oracle::Gaussian g(7);
  const TensorRing x = random_ring(g, {2, 3, 4}, {2, 3, 4, 2});
  EXPECT_EQ(cyclic_shift(x, 0), x);
  EXPECT_EQ(cyclic_shift(x, 3), x);
  EXPECT_EQ(cyclic_shift(x, 1).ranks(), RankVector({3, 4, 2, 3}));
  EXPECT_EQ(cyclic_shift(x, -1), cyclic_shift(x, 2));
}

TEST(CyclicShift, ContractionRotatesModes) {
  oracle::Gaussian g(8);
  for (int trial = 0; trial < 10; ++trial) {
    const TensorRing x = random_ring(g);
    const DenseTensor t = dense(x);
    for (Index s = 1; s <= x.order(); ++s)
      EXPECT_LE(oracle::rel_diff(tr_contract(cyclic_shift(x, s)), oracle::rotate_modes(t, s % x.order())), 1e-12);
  }
}

TEST(TrAddNaive, RanksAndOracle) {
  oracle::Gaussian g(9);
  const TensorRing x = random_ring(g, {3, 2, 3}, {2, 3, 2, 2});
  const TensorRing s = tr_add_naive(x, x);
  EXPECT_EQ(s.ranks(), RankVector({4, 6, 4, 4}));
  EXPECT_LE(oracle::rel_diff(tr_contract(s), scale_dense(dense(x), 2.0)), 1e-13);
  for (int trial = 0; trial < 10; ++trial) {
    const oracle::RandomShape sh = oracle::random_shape(g, false, false);
    const TensorRing a(g.cores(sh.modes, sh.ranks)), b(g.cores(sh.modes, sh.ranks));
    EXPECT_LE(oracle::rel_diff(tr_contract(tr_add_naive(a, b)), add_dense(dense(a), dense(b))), 1e-12);
  }
}

TEST(TrAddNaive, SelfSumDoesNotRoundDown) {
  oracle::Gaussian g(10);
  const TensorRing x = random_ring(g, {4, 4, 4, 4}, {3, 3, 3, 3, 3});
  const TensorRing r = tr_round(tr_add_naive(x, x), 1e-10);
  for (Index k = 0; k < x.order(); ++k) EXPECT_EQ(r.ranks()[k], 6);
}

TEST(TrAddModified, SelfSumRoundsBack) {
  oracle::Gaussian g(11);
  const TensorRing x = random_ring(g, {4, 3, 4, 3}, {3, 2, 3, 2, 3});
  const TensorRing s = tr_add_modified(x, x);
  EXPECT_EQ(s.ranks(), RankVector({3, 4, 6, 4, 3}));
  EXPECT_LE(oracle::rel_diff(tr_contract(s), scale_dense(dense(x), 2.0)), 1e-13);
  EXPECT_EQ(tr_round(s, 1e-10).ranks(), x.ranks());
}

TEST(TrAddModified, CutChoiceDoesNotChangeTheSum) {
  oracle::Gaussian g(12);
  for (int trial = 0; trial < 10; ++trial) {
    const oracle::RandomShape sh = oracle::random_shape(g, false, false);
    const TensorRing a(g.cores(sh.modes, sh.ranks)), b(g.cores(sh.modes, sh.ranks));
    const DenseTensor want = add_dense(dense(a), dense(b));
    const Index d = a.order();
    EXPECT_LE(oracle::rel_diff(tr_contract(tr_add_modified(a, b)), want), 1e-12);
    for (Index k = 0; k < d; ++k) {
      const TensorRing s = tr_add_modified(a, b, CorePair{k, (k + 1) % d});
      EXPECT_LE(oracle::rel_diff(tr_contract(s), want), 1e-12);
      if (d > 1) {
        EXPECT_EQ(s.ranks()[(k + 1) % d], a.ranks()[(k + 1) % d]);
      }
    }
  }
}

TEST(TrAddModified, Errors) {
  oracle::Gaussian g(13);
  const TensorRing a = random_ring(g, {2, 2, 2}, {2, 2, 2, 2});
  EXPECT_THROW(tr_add_modified(a, a, CorePair{0, 2}), ShapeError);
  EXPECT_THROW(tr_add_modified(a, random_ring(g, {2, 2, 2}, {3, 2, 2, 3})), ShapeError);
  EXPECT_THROW(tr_add_modified(a, random_ring(g, {2, 2, 3}, {2, 2, 2, 2})), ShapeError);
}

TEST(TrHadamard, RanksAndOracle) {
  oracle::Gaussian g(14);
  const TensorRing x = tr_random(Shape(6, 2), RankVector::uniform(6, 3), 5);
  EXPECT_EQ(tr_hadamard(x, x).ranks(), RankVector::uniform(6, 9));
  std::vector<DenseTensor> ones;
  for (Index k = 0; k < 6; ++k) ones.push_back(DenseTensor::filled({1, 2, 1}, 1.0));
  EXPECT_LE(oracle::rel_diff(tr_contract(tr_hadamard(x, TensorRing(ones))), tr_contract(x)), 1e-14);
  for (int trial = 0; trial < 10; ++trial) {
    const oracle::RandomShape sh = oracle::random_shape(g, false, false);
    const TensorRing a(g.cores(sh.modes, sh.ranks)), b(g.cores(sh.modes, sh.ranks));
    const TensorRing c = tr_hadamard(a, b);
    EXPECT_EQ(c.ranks(), elementwise_product(a.ranks(), b.ranks()));
    EXPECT_LE(oracle::rel_diff(tr_contract(c), hadamard_dense(dense(a), dense(b))), 1e-12);
  }
}

TEST(TrMatmul, OracleAndRanks) {
  oracle::Gaussian g(15);
  const RingMatrix a = random_ring_matrix(g, {2, 2, 2}, {2, 2, 2}, {2, 2, 2, 2});
  const RingMatrix b = random_ring_matrix(g, {2, 2, 2}, {2, 2, 2}, {2, 2, 2, 2});
  const RingMatrix c = tr_matmul(a, b);
  EXPECT_EQ(c.ranks(), RankVector::uniform(3, 4));
  EXPECT_LE(oracle::rel_diff(ring_matrix_contract(c), oracle::matmul(dense(a), dense(b))), 1e-12);
  const RingMatrix rect = random_ring_matrix(g, {3, 1}, {2, 4}, {2, 3, 2});
  const RingMatrix other = random_ring_matrix(g, {2, 4}, {3, 2}, {3, 1, 3});
  EXPECT_LE(oracle::rel_diff(ring_matrix_contract(tr_matmul(rect, other)), oracle::matmul(dense(rect), dense(other))),
            1e-12);
  EXPECT_THROW(tr_matmul(rect, rect), ShapeError);
}

TEST(TrMatmul, TableOnePipelineRanks) {
  const RingMatrix a = ring_matrix_random({6, 1, 1, 1}, {6, 6, 6, 6}, RankVector::uniform(4, 3), 1);
  const RingMatrix c = tr_matmul(a, tr_transpose(a));
  EXPECT_EQ(c.ranks(), RankVector::uniform(4, 9));
  EXPECT_EQ(c.core(0).shape(), (Shape{9, 6, 6, 9}));
  EXPECT_EQ(tr_param_count(c), 3159);
}

TEST(TrMatmul, IdentityRingIsNeutral) {
  oracle::Gaussian g(16);
  const RingMatrix a = random_ring_matrix(g, {2, 3}, {3, 2}, {2, 3, 2});
  const RingMatrix c = tr_matmul(a, RingMatrix({identity_core(3), identity_core(2)}));
  EXPECT_EQ(c.ranks(), a.ranks());
  EXPECT_LE(oracle::rel_diff(ring_matrix_contract(c), dense(a)), 1e-14);
}

TEST(TrTranspose, OracleAndInvolution) {
  oracle::Gaussian g(17);
  const RingMatrix a = random_ring_matrix(g, {2, 3, 2}, {3, 2, 2}, {2, 2, 3, 2});
  EXPECT_EQ(tr_transpose(tr_transpose(a)), a);
  EXPECT_EQ(ring_matrix_contract(tr_transpose(a)), oracle::transpose(ring_matrix_contract(a)));
  const RingMatrix eye({identity_core(3), identity_core(2)});
  EXPECT_EQ(tr_transpose(eye), eye);
}

TEST(TrNorm, MatchesOracle) {
  oracle::Gaussian g(18);
  for (int trial = 0; trial < 20; ++trial) {
    const TensorRing x = random_ring(g);
    const double want = oracle::norm(dense(x));
    EXPECT_NEAR(tr_norm(x), want, 1e-10 * want);
    EXPECT_NEAR(std::sqrt(detail::transfer_norm_sq(x.cores())), want, 1e-10 * want);
  }
  const RingMatrix m = random_ring_matrix(g, {2, 3}, {3, 2}, {2, 3, 2});
  EXPECT_NEAR(tr_norm(m), oracle::norm(dense(m)), 1e-10 * oracle::norm(dense(m)));
}

TEST(TrNorm, ZeroAndScaling) {
  oracle::Gaussian g(19);
  TensorRing x = random_ring(g, {3, 3, 3}, {2, 2, 2, 2});
  std::vector<DenseTensor> cores = x.cores();
  cores[1] = scale_dense(cores[1], -2.5);
  EXPECT_NEAR(tr_norm(TensorRing(cores)), 2.5 * tr_norm(x), 1e-12 * tr_norm(x));
  cores[1] = scale_dense(cores[1], 0.0);
  EXPECT_EQ(tr_norm(TensorRing(cores)), 0.0);
}

TEST(TrRound, ErrorBoundAndMonotoneRanks) {
  oracle::Gaussian g(20);
  for (double eps : {1e-4, 1e-8, 1e-10, 0.2}) {
    for (int trial = 0; trial < 5; ++trial) {
      const TensorRing x = random_ring(g, {3, 4, 3, 4}, {2, 3, 2, 2, 2});
      const TensorRing y = random_ring(g, {3, 4, 3, 4}, {2, 1, 2, 2, 2});
      const TensorRing inflated = tr_add_naive(tr_hadamard(x, y), tr_add_naive(x, x));
      const TensorRing r = tr_round(inflated, eps);
      EXPECT_LE(oracle::rel_diff(tr_contract(r), tr_contract(inflated)), eps);
      EXPECT_TRUE(elementwise_leq(r.ranks(), inflated.ranks()));
    }
  }
}

TEST(TrRound, EdgeCases) {
  oracle::Gaussian g(21);
  const TensorRing single = random_ring(g, {5}, {3, 3});
  EXPECT_EQ(tr_round(single, 1e-3), single);
  const TensorRing x = random_ring(g, {3, 3, 3}, {2, 2, 2, 2});
  std::vector<DenseTensor> cores = x.cores();
  cores[0] = scale_dense(cores[0], 0.0);
  const TensorRing z = tr_round(TensorRing(cores), 1e-10);
  EXPECT_EQ(z.ranks(), RankVector::uniform(3, 1));
  EXPECT_EQ(oracle::norm(tr_contract(z)), 0.0);
  EXPECT_THROW(tr_round(x, -1.0), std::invalid_argument);
}

TEST(TrRound, GaussianRingKeepsRanks) {
  const TensorRing x = tr_random(Shape(5, 4), RankVector::uniform(5, 3), 9);
  EXPECT_EQ(tr_round(x, 1e-10).ranks(), x.ranks());
}

TEST(TrRound, MatrixRingWithinTolerance) {
  oracle::Gaussian g(22);
  const RingMatrix a = random_ring_matrix(g, {2, 2, 2}, {2, 2, 2}, {2, 2, 2, 2});
  const RingMatrix c = tr_matmul(a, tr_transpose(a));
  const RingMatrix r = tr_round(c, 1e-8);
  EXPECT_LE(oracle::rel_diff(ring_matrix_contract(r), ring_matrix_contract(c)), 1e-8);
}

TEST(TrToTt, UnitEdgeReusesCores) {
  oracle::Gaussian g(23);
  const TensorRing x = random_ring(g, {2, 3, 4}, {1, 3, 2, 1});
  const TensorTrain t = tr_to_tt(x, 0);
  EXPECT_EQ(t.cores(), x.cores());
}

TEST(TrToTt, MatchesOracleForEveryCut) {
  oracle::Gaussian g(24);
  for (int trial = 0; trial < 10; ++trial) {
    const TensorRing x = random_ring(g);
    const DenseTensor t = dense(x);
    for (Index e = 0; e < x.order(); ++e) {
      const TensorTrain tt = tr_to_tt(x, e);
      EXPECT_EQ(tt.ranks()[0], 1);
      EXPECT_LE(oracle::rel_diff(tt_contract(tt), oracle::rotate_modes(t, e)), 1e-12);
    }
  }
  EXPECT_THROW(tr_to_tt(random_ring(g, {2, 2}, {2, 2, 2}), 2), ShapeError);
}

TEST(TrToTt, EqualsRepeatedTrainAddition) {
  oracle::Gaussian g(25);
  const TensorRing x = random_ring(g, {2, 3, 2, 3}, {3, 2, 4, 2, 3});
  std::optional<TensorTrain> sum;
  for (Index a = 0; a < 3; ++a) {
    std::vector<DenseTensor> cores = x.cores();
    DenseTensor first = DenseTensor::zeros({1, 2, 2});
    for (Index i = 0; i < 2; ++i)
      for (Index r = 0; r < 2; ++r) first.at({0, i, r}) = x.core(0).at({a, i, r});
    DenseTensor last = DenseTensor::zeros({2, 3, 1});
    for (Index l = 0; l < 2; ++l)
      for (Index i = 0; i < 3; ++i) last.at({l, i, 0}) = x.core(3).at({l, i, a});
    cores.front() = first;
    cores.back() = last;
    const TensorTrain term(cores);
    sum = sum ? tt_add(*sum, term) : term;
  }
  EXPECT_EQ(tr_to_tt(x, 0), *sum);
}

TEST(TtToTr, UnitEdgeIsTheSameCores) {
  oracle::Gaussian g(26);
  std::vector<Shape> modes{{3}, {2}, {4}};
  const TensorTrain t(g.cores(modes, {1, 3, 2, 1}));
  const TensorRing r = tt_to_tr(t, 1);
  EXPECT_EQ(r.cores(), t.cores());
  EXPECT_LE(oracle::rel_diff(tt_contract(tr_to_tt(r, 0)), tt_contract(t)), 1e-15);
}

TEST(TtToTr, LargerEdgeMatchesOracle) {
  oracle::Gaussian g(27);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::RandomShape sh = oracle::random_shape(g, true, false);
    const TensorTrain t(g.cores(sh.modes, sh.ranks));
    const DenseTensor want = oracle::contract(t.cores());
    for (Index p : {1, 2, 3}) {
      const TensorRing r = tt_to_tr(t, p);
      EXPECT_EQ(r.ranks()[0], p);
      EXPECT_LE(oracle::rel_diff(tr_contract(r), want), 1e-12);
    }
  }
  std::vector<Shape> modes{{2}};
  EXPECT_THROW(tt_to_tr(TensorTrain(g.cores(modes, {1, 1})), 0), ShapeError);
}

TEST(TtToTr, SplitRanks) {
  oracle::Gaussian g(28);
  std::vector<Shape> modes(5, Shape{3});
  const TensorTrain t(g.cores(modes, {1, 6, 4, 5, 3, 1}));
  EXPECT_EQ(tt_to_tr(t, 3).ranks(), RankVector({3, 2, 12, 15, 9, 3}));
  EXPECT_EQ(tt_to_tr(t, 4).ranks(), RankVector({4, 2, 16, 20, 12, 4}));
}

TEST(TrParamCount, Formula) {
  for (Index R : {1, 2, 5}) EXPECT_EQ(tr_param_count(tr_random(Shape(6, 6), RankVector::uniform(6, R), 1)), 36 * R * R);
}

TEST(OracleSuite, FiftyRandomInstancesPerOperation) {
  oracle::Gaussian g(29);
  for (int trial = 0; trial < 50; ++trial) {
    const oracle::RandomShape sh = oracle::random_shape(g, false, false);
    const TensorRing a(g.cores(sh.modes, sh.ranks)), b(g.cores(sh.modes, sh.ranks));
    const DenseTensor da = dense(a), db = dense(b);
    EXPECT_LE(oracle::rel_diff(tr_contract(a), da), 1e-10);
    EXPECT_LE(oracle::rel_diff(tr_contract(tr_add_naive(a, b)), add_dense(da, db)), 1e-10);
    EXPECT_LE(oracle::rel_diff(tr_contract(tr_add_modified(a, b)), add_dense(da, db)), 1e-10);
    EXPECT_LE(oracle::rel_diff(tr_contract(tr_hadamard(a, b)), hadamard_dense(da, db)), 1e-10);
    EXPECT_NEAR(tr_norm(a), oracle::norm(da), 1e-10 * oracle::norm(da));
    EXPECT_LE(oracle::rel_diff(tt_contract(tr_to_tt(a, 0)), da), 1e-10);
    EXPECT_LE(oracle::rel_diff(tr_contract(tt_to_tr(tr_to_tt(a, 0), 2)), da), 1e-10);
  }
}
