// SPDX-License-Identifier: Apache-2.0
#include "oracle.hpp"
#include "ttr/ttr.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace ttr;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ttr_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  CliRun run(const std::string& args) const {
    const std::string err_path = path("stderr.txt");
    const std::string cmd = std::string(TTR_CLI_PATH) + " " + args + " 2>" + err_path;
    CliRun r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int st = ::pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.err = slurp(err_path);
    return r;
  }

  template <class N>
  std::string save(const std::string& name, const N& net) const {
    write_text_file(path(name), serialize(net));
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, Table2RankThreeToStdout) {
  const CliRun r = run("table2 --ranks 3 --seed 1");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out,
            "R,pre_ranks,tr_rounded_max,tt_rounded_max,tr_params,tt_params,ratio\n"
            "3,9;9;9;9;9;9;9,9,45,2916,22104,0.13\n");
}

TEST_F(Cli, Table1WritesFileAndProfile) {
  const CliRun r = run("table1 --ranks 2,3 --seed 1 --out " + path("t1.csv") + " --profile-out " + path("p.csv") +
                    " --profile-rank 3 --profile-core 2");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(path("t1.csv")),
            "R,pre_ranks,tr_rounded_max,tt_rounded_max,tr_params,tt_params,ratio\n"
            "2,4;4;4;4;4,4,1,624,39,16\n"
            "3,9;9;9;9;9,9,1,3159,39,81\n");
  const std::string prof = slurp(path("p.csv"));
  EXPECT_EQ(prof.rfind("index,scaled_sigma\n1,", 0), 0u);
  EXPECT_EQ(std::count(prof.begin(), prof.end(), '\n'), 10);
}

TEST_F(Cli, ProfileCommand) {
  const CliRun r = run("profile --experiment table1 --rank 3 --core 4 --seed 2");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 10);
}

TEST_F(Cli, RoundtripHasKroneckerColumn) {
  const CliRun r = run("roundtrip --ranks 4 --seed 3");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find(",kron_tr_params\n4,3;"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(",108,"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(",64008,"), std::string::npos) << r.out;
}

TEST_F(Cli, BadArgumentsExitTwo) {
  for (const char* args : {"table1 --bogus", "table1 --ranks x", "", "convert --in nowhere.json --out x --to tt",
                           "generate --kind tq --dims 2 --ranks 1,1 --out x"}) {
    const CliRun r = run(args);
    EXPECT_EQ(r.status, 2) << args;
    EXPECT_FALSE(r.err.empty()) << args;
  }
}

TEST_F(Cli, InvalidRankValueIsRuntimeError) {
  const CliRun r = run("table1 --ranks 0");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("ttr: error: ", 0), 0u);
}

TEST_F(Cli, RoundRankOneRingIsUnchanged) {
  const std::string in = save("r1.json", tr_random({3, 4, 5}, RankVector::uniform(3, 1), 4));
  const CliRun r = run("round --in " + in + " --out " + path("o.json"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "pre:  (1,1,1,1)\npost: (1,1,1,1)\n");
  EXPECT_EQ(ranks_of(read_network_file(path("o.json"))), RankVector::uniform(3, 1));
}

TEST_F(Cli, RoundSelfSumTrainRecoversRanks) {
  oracle::Gaussian g(6);
  const TensorTrain x(g.cores({{3}, {4}, {3}, {2}}, {1, 2, 3, 2, 1}));
  const std::string in = save("sum.json", tt_add(x, x));
  const CliRun r = run("round --in " + in + " --out " + path("o.json") + " --eps 1e-10");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "pre:  (1,4,6,4,1)\npost: (1,2,3,2,1)\n");
  const auto out = std::get<TensorTrain>(read_network_file(path("o.json")));
  EXPECT_LE(oracle::rel_diff(tt_contract(out), tt_contract(tt_scale(x, 2.0))), 1e-10);
}

TEST_F(Cli, CorruptFileNamesTheField) {
  std::string text = serialize(tr_random({2, 2, 2}, RankVector::uniform(3, 2), 1));
  const auto pos = text.find("],[");
  text.replace(pos, 3, ",1],[");
  write_text_file(path("bad.json"), text);
  const CliRun r = run("round --in " + path("bad.json") + " --out " + path("o.json"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("cores[0]"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("o.json")));
}

TEST_F(Cli, ConvertRingToTrainAndBack) {
  const std::string in = save("ring.json", tr_random({2, 3, 2, 3}, RankVector({2, 3, 2, 2, 2}), 9));
  CliRun r = run("convert --in " + in + " --out " + path("tt.json") + " --to tt --edge 3 --check");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("check: relative error"), std::string::npos);
  const auto tt = std::get<TensorTrain>(read_network_file(path("tt.json")));
  EXPECT_EQ(tt.dims(), (Shape{2, 3, 2, 3}));
  EXPECT_EQ(tt.ranks()[1], 4);

  r = run("convert --in " + path("tt.json") + " --out " + path("tr.json") + " --to tr --boundary-rank 2 --check");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(ranks_of(read_network_file(path("tr.json")))[0], 2);
}

TEST_F(Cli, ConvertTrainWithUnitEdgeKeepsCores) {
  oracle::Gaussian g(10);
  const TensorTrain x(g.cores({{3}, {2}, {4}}, {1, 2, 3, 1}));
  const CliRun r = run("convert --in " + save("x.json", x) + " --out " + path("r.json") + " --to tr");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ring = std::get<TensorRing>(read_network_file(path("r.json")));
  for (Index k = 0; k < 3; ++k) EXPECT_EQ(ring.core(k), x.core(k));
}

TEST_F(Cli, ConvertUnsupportedCombinations) {
  const std::string tr = save("r.json", tr_random({2, 2}, RankVector::uniform(2, 2), 1));
  CliRun r = run("convert --in " + tr + " --out " + path("o.json") + " --to tr");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("already"), std::string::npos);
  r = run("convert --in " + tr + " --out " + path("o.json") + " --to tt --edge 5");
  EXPECT_EQ(r.status, 1);
  r = run("convert --in " + tr + " --out " + path("o.json") + " --to tt --edge 0");
  EXPECT_EQ(r.status, 2);
}

TEST_F(Cli, GenerateWritesRequestedShape) {
  const CliRun r = run("generate --kind tr_matrix --dims 2,3 --col-dims 3,2 --ranks 2,4,2 --seed 5 --out " +
                    path("g.json"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto m = std::get<RingMatrix>(read_network_file(path("g.json")));
  EXPECT_EQ(m.ranks(), RankVector({2, 4, 2}));
  EXPECT_EQ(m.col_dims(), (Shape{3, 2}));
}
