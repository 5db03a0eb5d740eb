// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/tr.hpp"
#include "ttr/tt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ttr {

enum class ExperimentKind { matmul, hadamard, tt_to_tr_roundtrip };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::matmul: return "matmul";
    case ExperimentKind::hadamard: return "hadamard";
    case ExperimentKind::tt_to_tr_roundtrip: return "tt_to_tr_roundtrip";
  }
  return "?";
}

/// Which ring's singular profile to record: the ring being rounded in the
/// row with R == rank, at 0-based `core`.
struct ProfileRequest {
  Index rank = 0;
  Index core = 0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::matmul;
  std::vector<Index> rank_values{3, 6, 9, 12};
  std::uint64_t seed = 42;
  double epsilon = 1e-10;
  Index order = 0;  ///< 0 picks the default: 4 for matmul, 6 otherwise
  Index mode_dim = 6;
  Index roundtrip_r1 = 3;  ///< ring edge of the converted train in the round trip
  unsigned jobs = 1;
  std::optional<ProfileRequest> profile;

  Index resolved_order() const { return order > 0 ? order : (kind == ExperimentKind::matmul ? 4 : 6); }

  void validate() const {
    if (rank_values.empty()) throw std::invalid_argument("experiment needs at least one rank value");
    for (Index r : rank_values)
      if (r < 1) throw std::invalid_argument("rank values must be >= 1, got " + std::to_string(r));
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
    if (mode_dim < 1) throw std::invalid_argument("mode dimension must be >= 1");
    if (roundtrip_r1 < 1) throw std::invalid_argument("round-trip ring edge must be >= 1");
    if (resolved_order() < 2) throw std::invalid_argument("experiment order must be >= 2");
  }
};

struct ExperimentRow {
  Index R = 0;
  RankVector pre_ranks = RankVector::uniform(1, 1);   ///< ring before rounding
  RankVector tr_rounded = RankVector::uniform(1, 1);  ///< ring after rounding
  RankVector tt_rounded = RankVector::uniform(1, 1);  ///< train after rounding
  Index tr_params = 0;
  Index tt_params = 0;
  /// Round trip only: storage of the rounded Kronecker-route ring.
  std::optional<Index> kronecker_tr_params;

  double ratio() const { return static_cast<double>(tr_params) / static_cast<double>(tt_params); }
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::matmul;
  std::vector<ExperimentRow> rows;
  std::optional<ProfileRequest> profile_source;
  std::vector<double> profile;
};

/// Singular values of the unfolding that tr_round truncates to the left of
/// `core` (0-based): its right unfolding R_k x (I_k R_{k+1}) taken during
/// the rounding sweep, with core 0 seen in the final shifted pass. Values are
/// scaled by sqrt(d R_1) / ||ring|| and sorted nonincreasing, so v at
/// position r+1 is roughly the relative error of truncating to rank r.
template <CoreKind Kind>
std::vector<double> singular_profile(const Ring<Kind>& ring, Index core, double eps) {
  const Index d = ring.order();
  if (d < 2) throw ShapeError("singular_profile needs at least two cores");
  if (core < 0 || core >= d)
    throw ShapeError("core index " + std::to_string(core) + " outside [0," + std::to_string(d) + ")");
  const double norm = tr_norm(ring);
  if (norm == 0.0) throw std::domain_error("singular_profile of a zero ring");
  const double scale = std::sqrt(static_cast<double>(d) * static_cast<double>(ring.ranks()[0])) / norm;
  Vector captured;
  detail::ring_round(ring, eps, [&](std::size_t k, const Vector& s) {
    if (static_cast<Index>(k) == core) captured = s;
  });
  std::vector<double> out(captured.data(), captured.data() + captured.size());
  for (double& v : out) v *= scale;
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

namespace detail {

inline void expect_ranks(const RankVector& got, const RankVector& want, const char* what) {
  if (!(got == want))
    throw std::logic_error(std::string(what) + ": ranks " + got.to_string() + " differ from expected " +
                           want.to_string());
}

struct RowResult {
  ExperimentRow row;
  std::vector<double> profile;
};

inline std::optional<Index> profile_core(const ExperimentConfig& cfg, Index R) {
  if (cfg.profile && cfg.profile->rank == R) return cfg.profile->core;
  return std::nullopt;
}

/// A (6 x 6^{d-1}) matrix ring: the row index sits on core 0, the other
/// cores have a single row. A A^T is formed core-wise and rounded, then the
/// same product is redone on the rounded train of A.
inline RowResult matmul_row(const ExperimentConfig& cfg, Index R) {
  const Index d = cfg.resolved_order();
  Shape rows(static_cast<std::size_t>(d), 1);
  rows[0] = cfg.mode_dim;
  const Shape cols(static_cast<std::size_t>(d), cfg.mode_dim);
  const RingMatrix a =
      ring_matrix_random(rows, cols, RankVector::uniform(d, R), derive_seed(cfg.seed, static_cast<std::uint64_t>(R)));
  const RingMatrix c = tr_matmul(a, tr_transpose(a));
  expect_ranks(c.ranks(), elementwise_product(a.ranks(), a.ranks()), "A A^T ring");
  const RingMatrix cr = tr_round(c, cfg.epsilon);

  const TrainMatrix a_tt = tt_round(tr_to_tt(a, 0), cfg.epsilon);
  const TrainMatrix c_tt_full = tt_matmul(a_tt, tt_transpose(a_tt));
  expect_ranks(c_tt_full.ranks(), elementwise_product(a_tt.ranks(), a_tt.ranks()), "A A^T train");
  const TrainMatrix c_tt = tt_round(c_tt_full, cfg.epsilon);

  RowResult out{ExperimentRow{R, c.ranks(), cr.ranks(), c_tt.ranks(), cr.param_count(), c_tt.param_count(), {}}, {}};
  if (auto k = profile_core(cfg, R)) out.profile = singular_profile(c, *k, cfg.epsilon);
  return out;
}

struct HadamardPipeline {
  TensorRing c;
  TensorRing cr;
  TensorTrain c_tt;
};

inline HadamardPipeline hadamard_pipeline(const ExperimentConfig& cfg, Index R) {
  const Index d = cfg.resolved_order();
  const TensorRing a = tr_random(Shape(static_cast<std::size_t>(d), cfg.mode_dim), RankVector::uniform(d, R),
                                 derive_seed(cfg.seed, static_cast<std::uint64_t>(R)));
  TensorRing c = tr_hadamard(a, a);
  expect_ranks(c.ranks(), elementwise_product(a.ranks(), a.ranks()), "Hadamard ring");
  TensorRing cr = tr_round(c, cfg.epsilon);
  const TensorTrain a_tt = tt_round(tr_to_tt(a, 0), cfg.epsilon);
  TensorTrain c_tt = tt_hadamard_rounded(a_tt, a_tt, cfg.epsilon);
  return {std::move(c), std::move(cr), std::move(c_tt)};
}

inline RowResult hadamard_row(const ExperimentConfig& cfg, Index R) {
  HadamardPipeline p = hadamard_pipeline(cfg, R);
  RowResult out{
      ExperimentRow{R, p.c.ranks(), p.cr.ranks(), p.c_tt.ranks(), p.cr.param_count(), p.c_tt.param_count(), {}},
      {}};
  if (auto k = profile_core(cfg, R)) out.profile = singular_profile(p.c, *k, cfg.epsilon);
  return out;
}

/// Ranks tt_to_tr produces for a train with ranks `t` and ring edge p.
inline RankVector converted_ranks(const RankVector& t, Index p) {
  if (p == 1) return t;
  std::vector<Index> r{p, (t[1] + p - 1) / p};
  for (Index k = 2; k < t.order(); ++k) r.push_back(p * t[k]);
  r.push_back(p);
  return RankVector(std::move(r));
}

inline RowResult roundtrip_row(const ExperimentConfig& cfg, Index R) {
  HadamardPipeline p = hadamard_pipeline(cfg, R);
  const TensorRing z = tt_to_tr(p.c_tt, cfg.roundtrip_r1);
  expect_ranks(z.ranks(), converted_ranks(p.c_tt.ranks(), cfg.roundtrip_r1), "converted ring");
  const TensorRing zr = tr_round(z, cfg.epsilon);
  RowResult out{
      ExperimentRow{R, z.ranks(), zr.ranks(), p.c_tt.ranks(), zr.param_count(), p.c_tt.param_count(),
                    p.cr.param_count()},
      {}};
  if (auto k = profile_core(cfg, R)) out.profile = singular_profile(z, *k, cfg.epsilon);
  return out;
}

inline ExperimentReport run_rows(const ExperimentConfig& cfg, ExperimentKind expected,
                                 RowResult (*row)(const ExperimentConfig&, Index)) {
  if (cfg.kind != expected)
    throw std::invalid_argument(std::string("config kind is ") + to_string(cfg.kind) + ", expected " +
                                to_string(expected));
  cfg.validate();
  if (cfg.profile) {
    if (std::find(cfg.rank_values.begin(), cfg.rank_values.end(), cfg.profile->rank) == cfg.rank_values.end())
      throw std::invalid_argument("profile rank " + std::to_string(cfg.profile->rank) + " is not among the rank values");
    if (cfg.profile->core < 0 || cfg.profile->core >= cfg.resolved_order())
      throw std::invalid_argument("profile core " + std::to_string(cfg.profile->core) + " out of range");
  }

  const std::size_t n = cfg.rank_values.size();
  std::vector<std::optional<RowResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        results[i] = row(cfg, cfg.rank_values[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::clamp<unsigned>(cfg.jobs, 1, static_cast<unsigned>(n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  ExperimentReport report;
  report.kind = cfg.kind;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    report.rows.push_back(std::move(results[i]->row));
    if (!results[i]->profile.empty()) {
      report.profile = std::move(results[i]->profile);
      report.profile_source = cfg.profile;
    }
  }
  return report;
}

}  // namespace detail

/// Rounded ranks of A A^T for a random (6 x 6^3) matrix ring, against the
/// same product computed in train form.
inline ExperimentReport run_matmul_experiment(const ExperimentConfig& cfg) {
  return detail::run_rows(cfg, ExperimentKind::matmul, detail::matmul_row);
}

/// Rounded ranks of x .* x for a random 6-way ring with dims 6, against the
/// same product of the train obtained from x.
inline ExperimentReport run_hadamard_experiment(const ExperimentConfig& cfg) {
  return detail::run_rows(cfg, ExperimentKind::hadamard, detail::hadamard_row);
}

/// Continues the Hadamard pipeline: the rounded train product is converted to
/// a ring with edge cfg.roundtrip_r1 and rounded again. kronecker_tr_params
/// holds the storage of the rounded ring from the Kronecker route.
inline ExperimentReport run_tt_to_tr_roundtrip(const ExperimentConfig& cfg) {
  return detail::run_rows(cfg, ExperimentKind::tt_to_tr_roundtrip, detail::roundtrip_row);
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::matmul: return run_matmul_experiment(cfg);
    case ExperimentKind::hadamard: return run_hadamard_experiment(cfg);
    case ExperimentKind::tt_to_tr_roundtrip: return run_tt_to_tr_roundtrip(cfg);
  }
  throw std::invalid_argument("unknown experiment kind");
}

}  // namespace ttr
