// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/dense.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace ttr {

/// The ranks (R_1, ..., R_d, R_1) of a train or ring. Position k < d is the
/// left rank of core k; the closing entry repeats the first.
class RankVector {
 public:
  explicit RankVector(std::vector<Index> ranks) : ranks_(std::move(ranks)) {
    if (ranks_.size() < 2) throw ShapeError("rank vector needs at least two entries");
    if (ranks_.front() != ranks_.back())
      throw ShapeError("rank vector must close: first " + std::to_string(ranks_.front()) + " != last " +
                       std::to_string(ranks_.back()));
    for (Index r : ranks_)
      if (r < 1) throw ShapeError("ranks must be >= 1");
  }

  static RankVector uniform(Index order, Index rank) {
    return RankVector(std::vector<Index>(static_cast<std::size_t>(order + 1), rank));
  }

  /// Train ranks: boundary 1, `interior` in between.
  static RankVector train(std::vector<Index> interior) {
    interior.insert(interior.begin(), 1);
    interior.push_back(1);
    return RankVector(std::move(interior));
  }

  Index order() const noexcept { return static_cast<Index>(ranks_.size()) - 1; }
  Index operator[](Index k) const { return ranks_.at(static_cast<std::size_t>(k)); }
  const std::vector<Index>& values() const noexcept { return ranks_; }
  Index max() const { return *std::max_element(ranks_.begin(), ranks_.end()); }

  bool operator==(const RankVector&) const = default;

  std::string to_string(char sep = ',') const {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < ranks_.size(); ++k) os << (k ? std::string(1, sep) : "") << ranks_[k];
    os << ')';
    return os.str();
  }

 private:
  std::vector<Index> ranks_;
};

/// Elementwise partial order used to compare rank vectors.
inline bool elementwise_leq(const RankVector& a, const RankVector& b) {
  if (a.order() != b.order()) throw ShapeError("rank vectors of different order");
  for (Index k = 0; k <= a.order(); ++k)
    if (a[k] > b[k]) return false;
  return true;
}

inline RankVector elementwise_product(const RankVector& a, const RankVector& b) {
  if (a.order() != b.order()) throw ShapeError("rank vectors of different order");
  std::vector<Index> out(a.values().size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.values()[k] * b.values()[k];
  return RankVector(std::move(out));
}

inline RankVector elementwise_sum(const RankVector& a, const RankVector& b) {
  if (a.order() != b.order()) throw ShapeError("rank vectors of different order");
  std::vector<Index> out(a.values().size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.values()[k] + b.values()[k];
  return RankVector(std::move(out));
}

}  // namespace ttr
