// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/experiments.hpp"
#include "ttr/network.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ttr {

using AnyNetwork = std::variant<TensorTrain, TensorRing, TrainMatrix, RingMatrix>;

/// Malformed network document; the message names the offending field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kNetworkFormat = "ttr-network";
inline constexpr int kNetworkFormatVersion = 1;

template <CoreKind Kind, Topology Topo>
constexpr const char* kind_name() {
  if constexpr (Topo == Topology::train) {
    return Kind == CoreKind::vector ? "tt" : "tt_matrix";
  } else {
    return Kind == CoreKind::vector ? "tr" : "tr_matrix";
  }
}

inline std::string kind_name(const AnyNetwork& net) {
  return std::visit([](const auto& n) -> std::string {
    using N = std::decay_t<decltype(n)>;
    return kind_name<N::kind, N::topology>();
  }, net);
}

inline RankVector ranks_of(const AnyNetwork& net) {
  return std::visit([](const auto& n) { return n.ranks(); }, net);
}

/// JSON document:
///   {"format": "ttr-network", "version": 1, "kind": "tt" | "tr" | "tt_matrix" | "tr_matrix",
///    "dims": [...], "col_dims": [...] (matrix kinds), "ranks": [R_1, ..., R_d, R_1],
///    "cores": [[column-major core data], ...]}
/// Doubles are written in shortest round-trip form, so reading reproduces
/// every bit.
template <CoreKind Kind, Topology Topo>
std::string serialize(const Network<Kind, Topo>& net) {
  nlohmann::ordered_json j;
  j["format"] = kNetworkFormat;
  j["version"] = kNetworkFormatVersion;
  j["kind"] = kind_name<Kind, Topo>();
  j["dims"] = net.dims();
  if constexpr (Kind == CoreKind::matrix) j["col_dims"] = net.col_dims();
  j["ranks"] = net.ranks().values();
  auto cores = nlohmann::ordered_json::array();
  for (Index k = 0; k < net.order(); ++k) {
    const auto data = net.core(k).data();
    for (double v : data)
      if (!std::isfinite(v)) throw FormatError("cores[" + std::to_string(k) + "] holds a non-finite value");
    cores.push_back(std::vector<double>(data.begin(), data.end()));
  }
  j["cores"] = std::move(cores);
  return j.dump() + "\n";
}

inline std::string serialize(const AnyNetwork& net) {
  return std::visit([](const auto& n) { return serialize(n); }, net);
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw FormatError(std::string("missing field \"") + name + "\"");
  return *it;
}

inline Shape index_list(const nlohmann::json& j, const std::string& name, Index min_value) {
  if (!j.is_array()) throw FormatError(name + ": expected an array of integers");
  Shape out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& v = j[i];
    if (!v.is_number_integer() || v.get<Index>() < min_value)
      throw FormatError(name + "[" + std::to_string(i) + "]: expected an integer >= " + std::to_string(min_value));
    out.push_back(v.get<Index>());
  }
  return out;
}

template <CoreKind Kind, Topology Topo>
Network<Kind, Topo> parse_cores(const nlohmann::json& j) {
  const Shape dims = index_list(field(j, "dims"), "dims", 1);
  const Index d = static_cast<Index>(dims.size());
  if (d == 0) throw FormatError("dims: need at least one dimension");
  Shape col_dims;
  if constexpr (Kind == CoreKind::matrix) {
    col_dims = index_list(field(j, "col_dims"), "col_dims", 1);
    if (static_cast<Index>(col_dims.size()) != d)
      throw FormatError("col_dims: expected " + std::to_string(d) + " entries, got " + std::to_string(col_dims.size()));
  }
  const Shape ranks = index_list(field(j, "ranks"), "ranks", 1);
  if (static_cast<Index>(ranks.size()) != d + 1)
    throw FormatError("ranks: expected " + std::to_string(d + 1) + " entries, got " + std::to_string(ranks.size()));
  if (ranks.front() != ranks.back()) throw FormatError("ranks: first and last entries differ");
  if (Topo == Topology::train && ranks.front() != 1) throw FormatError("ranks: train boundary ranks must be 1");

  const auto& cores_json = field(j, "cores");
  if (!cores_json.is_array() || static_cast<Index>(cores_json.size()) != d)
    throw FormatError("cores: expected an array of " + std::to_string(d) + " cores");
  std::vector<DenseTensor> cores;
  for (Index k = 0; k < d; ++k) {
    const std::string name = "cores[" + std::to_string(k) + "]";
    const auto& cj = cores_json[static_cast<std::size_t>(k)];
    Shape modes{dims[static_cast<std::size_t>(k)]};
    if constexpr (Kind == CoreKind::matrix) modes.push_back(col_dims[static_cast<std::size_t>(k)]);
    const Shape shape = core_shape(ranks[static_cast<std::size_t>(k)], modes, ranks[static_cast<std::size_t>(k) + 1]);
    const Index expected = checked_product(shape);
    if (!cj.is_array() || static_cast<Index>(cj.size()) != expected)
      throw FormatError(name + ": expected " + std::to_string(expected) + " values for shape " + shape_string(shape) +
                        ", got " + (cj.is_array() ? std::to_string(cj.size()) : std::string("a non-array")));
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(expected));
    for (std::size_t i = 0; i < cj.size(); ++i) {
      if (!cj[i].is_number()) throw FormatError(name + "[" + std::to_string(i) + "]: expected a number");
      data.push_back(cj[i].get<double>());
    }
    cores.emplace_back(shape, std::move(data));
  }
  return Network<Kind, Topo>(std::move(cores));
}

}  // namespace detail

inline AnyNetwork parse_network(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("document is not a JSON object");
  const auto& format = detail::field(j, "format");
  if (!format.is_string() || format.get<std::string>() != kNetworkFormat)
    throw FormatError(std::string("format: expected \"") + kNetworkFormat + "\"");
  const auto& version = detail::field(j, "version");
  if (!version.is_number_integer() || version.get<int>() != kNetworkFormatVersion)
    throw FormatError("version: unsupported (expected " + std::to_string(kNetworkFormatVersion) + ")");
  const auto& kind = detail::field(j, "kind");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "tt") return detail::parse_cores<CoreKind::vector, Topology::train>(j);
  if (k == "tr") return detail::parse_cores<CoreKind::vector, Topology::ring>(j);
  if (k == "tt_matrix") return detail::parse_cores<CoreKind::matrix, Topology::train>(j);
  if (k == "tr_matrix") return detail::parse_cores<CoreKind::matrix, Topology::ring>(j);
  throw FormatError("kind: expected one of tt, tr, tt_matrix, tr_matrix");
}

inline AnyNetwork read_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- CSV reports ----

inline std::string format_ratio(const ExperimentRow& row, ExperimentKind kind) {
  if (kind == ExperimentKind::matmul && row.tt_params > 0 && row.tr_params % row.tt_params == 0)
    return std::to_string(row.tr_params / row.tt_params);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", row.ratio());
  return buf;
}

/// Header R,pre_ranks,tr_rounded_max,tt_rounded_max,tr_params,tt_params,ratio;
/// round-trip reports add kron_tr_params. pre_ranks is the full rank vector
/// joined by ';'.
inline void write_report_csv(std::ostream& os, const ExperimentReport& report) {
  const bool roundtrip = report.kind == ExperimentKind::tt_to_tr_roundtrip;
  os << "R,pre_ranks,tr_rounded_max,tt_rounded_max,tr_params,tt_params,ratio";
  if (roundtrip) os << ",kron_tr_params";
  os << '\n';
  for (const auto& row : report.rows) {
    std::string pre = row.pre_ranks.to_string(';');
    pre = pre.substr(1, pre.size() - 2);
    os << row.R << ',' << pre << ',' << row.tr_rounded.max() << ',' << row.tt_rounded.max() << ',' << row.tr_params
       << ',' << row.tt_params << ',' << format_ratio(row, report.kind);
    if (roundtrip) os << ',' << row.kronecker_tr_params.value_or(0);
    os << '\n';
  }
}

/// Two columns: 1-based position and scaled singular value.
inline void write_profile_csv(std::ostream& os, const std::vector<double>& profile) {
  os << "index,scaled_sigma\n";
  char buf[40];
  for (std::size_t i = 0; i < profile.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", profile[i]);
    os << i + 1 << ',' << buf << '\n';
  }
}

}  // namespace ttr
