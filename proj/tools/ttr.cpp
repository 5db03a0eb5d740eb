// SPDX-License-Identifier: Apache-2.0
//
// ttr: run the rank-recovery experiments and round or convert serialized
// train/ring files.

#include "ttr/ttr.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct ExperimentArgs {
  std::vector<ttr::Index> ranks{3, 6, 9, 12};
  std::uint64_t seed = 42;
  double eps = 1e-10;
  std::string out;
  std::string profile_out;
  std::optional<ttr::Index> profile_rank;
  std::optional<ttr::Index> profile_core;
  unsigned jobs = 1;
  ttr::Index boundary_rank = 3;
};

void add_experiment_flags(CLI::App* cmd, ExperimentArgs& a, bool roundtrip) {
  cmd->add_option("--ranks", a.ranks, "comma-separated R values")->delimiter(',')->capture_default_str();
  cmd->add_option("--seed", a.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--eps", a.eps, "rounding tolerance")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", a.out, "report CSV (default: stdout)");
  cmd->add_option("--profile-out", a.profile_out, "write a scaled singular profile CSV");
  cmd->add_option("--profile-rank", a.profile_rank, "R of the profiled row");
  cmd->add_option("--profile-core", a.profile_core, "1-based core of the profile");
  cmd->add_option("--jobs", a.jobs, "rows computed concurrently")->capture_default_str()->check(CLI::PositiveNumber);
  if (roundtrip)
    cmd->add_option("--boundary-rank", a.boundary_rank, "ring edge R_1 of the converted train")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

// Default profile: table1 at R=6, core 4; table2 at R=12, core 5.
ttr::ProfileRequest profile_request(ttr::ExperimentKind kind, std::optional<ttr::Index> rank,
                                    std::optional<ttr::Index> core) {
  const bool matmul = kind == ttr::ExperimentKind::matmul;
  return {rank.value_or(matmul ? 6 : 12), core.value_or(matmul ? 4 : 5) - 1};
}

template <class Fn>
void with_output(const std::string& path, Fn&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

int run_experiment_cmd(ttr::ExperimentKind kind, const ExperimentArgs& a) {
  ttr::ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.rank_values = a.ranks;
  cfg.seed = a.seed;
  cfg.epsilon = a.eps;
  cfg.jobs = a.jobs;
  cfg.roundtrip_r1 = a.boundary_rank;
  if (!a.profile_out.empty()) cfg.profile = profile_request(kind, a.profile_rank, a.profile_core);
  const ttr::ExperimentReport report = ttr::run_experiment(cfg);
  with_output(a.out, [&](std::ostream& os) { ttr::write_report_csv(os, report); });
  if (!a.profile_out.empty())
    with_output(a.profile_out, [&](std::ostream& os) { ttr::write_profile_csv(os, report.profile); });
  return 0;
}

struct ProfileArgs {
  std::string experiment = "table1";
  std::optional<ttr::Index> rank;
  std::optional<ttr::Index> core;
  std::uint64_t seed = 42;
  double eps = 1e-10;
  std::string out;
};

int run_profile_cmd(const ProfileArgs& a) {
  ttr::ExperimentConfig cfg;
  cfg.kind = a.experiment == "table1" ? ttr::ExperimentKind::matmul : ttr::ExperimentKind::hadamard;
  cfg.profile = profile_request(cfg.kind, a.rank, a.core);
  cfg.rank_values = {cfg.profile->rank};
  cfg.seed = a.seed;
  cfg.epsilon = a.eps;
  const ttr::ExperimentReport report = ttr::run_experiment(cfg);
  with_output(a.out, [&](std::ostream& os) { ttr::write_profile_csv(os, report.profile); });
  return 0;
}

struct RoundArgs {
  std::string in;
  std::string out;
  double eps = 1e-10;
};

int run_round_cmd(const RoundArgs& a) {
  const ttr::AnyNetwork net = ttr::read_network_file(a.in);
  const ttr::AnyNetwork rounded = std::visit(
      [&](const auto& n) -> ttr::AnyNetwork {
        using N = std::decay_t<decltype(n)>;
        if constexpr (N::topology == ttr::Topology::train) {
          return ttr::tt_round(n, a.eps);
        } else {
          return ttr::tr_round(n, a.eps);
        }
      },
      net);
  ttr::write_text_file(a.out, ttr::serialize(rounded));
  std::cout << "pre:  " << ttr::ranks_of(net).to_string() << '\n'
            << "post: " << ttr::ranks_of(rounded).to_string() << '\n';
  return 0;
}

struct ConvertArgs {
  std::string in;
  std::string out;
  std::string to;
  ttr::Index edge = 1;
  ttr::Index boundary_rank = 1;
  bool check = false;
};

double dense_mismatch(const ttr::AnyNetwork& a, const ttr::AnyNetwork& b) {
  auto dense = [](const ttr::AnyNetwork& n) {
    return std::visit(
        [](const auto& x) -> ttr::DenseTensor {
          using N = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<N, ttr::TensorTrain> || std::is_same_v<N, ttr::TrainMatrix>) {
            return ttr::tt_contract(x);
          } else if constexpr (std::is_same_v<N, ttr::TensorRing>) {
            return ttr::tr_contract(x);
          } else {
            return ttr::ring_matrix_contract(x);
          }
        },
        n);
  };
  return ttr::rel_error(dense(b), dense(a));
}

int run_convert_cmd(const ConvertArgs& a) {
  const ttr::AnyNetwork net = ttr::read_network_file(a.in);
  const ttr::Index edge = a.edge - 1;
  // A train cut at R_k lists the modes starting from core k.
  ttr::AnyNetwork reference = net;
  const ttr::AnyNetwork converted = std::visit(
      [&](const auto& n) -> ttr::AnyNetwork {
        using N = std::decay_t<decltype(n)>;
        const bool is_train = N::topology == ttr::Topology::train;
        if (a.to == (is_train ? "tt" : "tr"))
          throw std::invalid_argument("input is already a " + ttr::kind_name(ttr::AnyNetwork(n)) +
                                      "; nothing to convert");
        if constexpr (N::topology == ttr::Topology::train) {
          return ttr::tt_to_tr(n, a.boundary_rank);
        } else {
          if (edge >= n.order())
            throw std::invalid_argument("--edge " + std::to_string(a.edge) + " exceeds the ring order " +
                                        std::to_string(n.order()));
          reference = ttr::cyclic_shift(n, edge);
          return ttr::tr_to_tt(n, edge);
        }
      },
      net);
  if (a.check) {
    const double err = dense_mismatch(reference, converted);
    if (!(err <= 1e-10)) throw std::runtime_error("conversion check failed: relative error " + std::to_string(err));
    std::cout << "check: relative error " << err << '\n';
  }
  ttr::write_text_file(a.out, ttr::serialize(converted));
  std::cout << "ranks: " << ttr::ranks_of(net).to_string() << " -> " << ttr::ranks_of(converted).to_string() << '\n';
  return 0;
}

struct GenerateArgs {
  std::string kind = "tr";
  std::vector<ttr::Index> dims;
  std::vector<ttr::Index> col_dims;
  std::vector<ttr::Index> ranks;
  std::uint64_t seed = 42;
  std::string out;
};

int run_generate_cmd(const GenerateArgs& a) {
  const ttr::RankVector ranks(a.ranks);
  const bool matrix = a.kind == "tt_matrix" || a.kind == "tr_matrix";
  const bool train = a.kind == "tt" || a.kind == "tt_matrix";
  if (matrix && a.col_dims.size() != a.dims.size())
    throw std::invalid_argument("--col-dims must have as many entries as --dims");
  ttr::AnyNetwork net = ttr::TensorRing(std::vector<ttr::DenseTensor>{ttr::detail::zero_core(1, {1}, 1)});
  if (matrix) {
    const ttr::RingMatrix r = ttr::ring_matrix_random(a.dims, a.col_dims, ranks, a.seed);
    if (train) {
      net = ttr::TrainMatrix(r.cores());
    } else {
      net = r;
    }
  } else {
    const ttr::TensorRing r = ttr::tr_random(a.dims, ranks, a.seed);
    if (train) {
      net = ttr::TensorTrain(r.cores());
    } else {
      net = r;
    }
  }
  ttr::write_text_file(a.out, ttr::serialize(net));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-train / tensor-ring rounding experiments and file tools", "ttr"};
  app.require_subcommand(1);

  ExperimentArgs t1, t2, rt;
  add_experiment_flags(app.add_subcommand("table1", "A A^T rank recovery (matrix rings)"), t1, false);
  add_experiment_flags(app.add_subcommand("table2", "Hadamard rank recovery (6-way rings)"), t2, false);
  add_experiment_flags(app.add_subcommand("roundtrip", "Hadamard train converted back to a ring"), rt, true);

  ProfileArgs pa;
  auto* profile = app.add_subcommand("profile", "scaled singular profile of one core unfolding");
  profile->add_option("--experiment", pa.experiment)->check(CLI::IsMember({"table1", "table2"}))->capture_default_str();
  profile->add_option("--rank", pa.rank, "R (default 6 for table1, 12 for table2)");
  profile->add_option("--core", pa.core, "1-based core (default 4 for table1, 5 for table2)");
  profile->add_option("--seed", pa.seed)->capture_default_str();
  profile->add_option("--eps", pa.eps)->capture_default_str()->check(CLI::NonNegativeNumber);
  profile->add_option("--out", pa.out, "profile CSV (default: stdout)");

  RoundArgs ra;
  auto* round = app.add_subcommand("round", "round a serialized train or ring");
  round->add_option("--in", ra.in)->required()->check(CLI::ExistingFile);
  round->add_option("--out", ra.out)->required();
  round->add_option("--eps", ra.eps)->capture_default_str()->check(CLI::NonNegativeNumber);

  ConvertArgs ca;
  auto* convert = app.add_subcommand("convert", "convert between train and ring");
  convert->add_option("--in", ca.in)->required()->check(CLI::ExistingFile);
  convert->add_option("--out", ca.out)->required();
  convert->add_option("--to", ca.to)->required()->check(CLI::IsMember({"tt", "tr"}));
  convert->add_option("--edge", ca.edge, "ring to train: 1-based rank R_k to cut")->capture_default_str()
      ->check(CLI::PositiveNumber);
  convert->add_option("--boundary-rank", ca.boundary_rank, "train to ring: target R_1")->capture_default_str()
      ->check(CLI::PositiveNumber);
  convert->add_flag("--check", ca.check, "compare dense contractions (relative error <= 1e-10)");

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "write a random Gaussian-core network");
  generate->add_option("--kind", ga.kind)->check(CLI::IsMember({"tt", "tr", "tt_matrix", "tr_matrix"}))
      ->capture_default_str();
  generate->add_option("--dims", ga.dims)->required()->delimiter(',');
  generate->add_option("--col-dims", ga.col_dims)->delimiter(',');
  generate->add_option("--ranks", ga.ranks, "R_1,...,R_d,R_1")->required()->delimiter(',');
  generate->add_option("--seed", ga.seed)->capture_default_str();
  generate->add_option("--out", ga.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ttr: error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (app.got_subcommand("table1")) return run_experiment_cmd(ttr::ExperimentKind::matmul, t1);
    if (app.got_subcommand("table2")) return run_experiment_cmd(ttr::ExperimentKind::hadamard, t2);
    if (app.got_subcommand("roundtrip")) return run_experiment_cmd(ttr::ExperimentKind::tt_to_tr_roundtrip, rt);
    if (app.got_subcommand("profile")) return run_profile_cmd(pa);
    if (app.got_subcommand("round")) return run_round_cmd(ra);
    if (app.got_subcommand("convert")) return run_convert_cmd(ca);
    if (app.got_subcommand("generate")) return run_generate_cmd(ga);
  } catch (const std::exception& e) {
    std::cerr << "ttr: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
