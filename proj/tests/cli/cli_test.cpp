// End-to-end tests of the lyapnet executable: exit codes, artifacts, reruns.

#include "lyapnet/generators.hpp"
#include "lyapnet/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using namespace lyapnet;

namespace {

const fs::path kSource = LYAPNET_SOURCE_DIR;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lyapnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the tool; stderr lands in err_.
  int run(const std::string& args) {
    const std::string cmd = std::string("\"") + LYAPNET_CLI + "\" " + args + " 2> \"" + (dir_ / "stderr").string() + "\"";
    const int status = std::system(cmd.c_str());
    err_ = read_file(dir_ / "stderr");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path put(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  std::string q(const fs::path& p) const { return "\"" + p.string() + "\""; }

  fs::path dir_;
  std::string err_;
};

const char* kIdentityNet = R"({"update_form":"plain","dt":1,"input_dim":2,"layers":[
  {"weights":[[1,0],[0,1]],"bias":[0,0],"activation":{"kind":"identity"}},
  {"weights":[[1,0],[0,1]],"bias":[0,0],"activation":{"kind":"identity"}}]})";

}  // namespace

TEST_F(Cli, HelpAndMissingSubcommand) {
  EXPECT_EQ(run("--help > /dev/null"), 0);
  EXPECT_EQ(run("--version > /dev/null"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("analyze --network x.json"), 2);
}

TEST_F(Cli, AnalyzeIdentityNetwork) {
  const auto net = put("id.json", kIdentityNet), in = put("in.csv", "3,-1\n0.5,2\n");
  ASSERT_EQ(run("analyze --network " + q(net) + " --inputs " + q(in) + " --out " + q(dir_ / "r.csv")), 0) << err_;
  const std::string csv = read_file(dir_ / "r.csv");
  EXPECT_EQ(csv,
            "input_id,depth_j,k,mu_log,lambda,max_lambda,sum_lambda,positive_count,classification,dissipative\n"
            "0,2,0,0,0,,,,,\n0,2,1,0,0,,,,,\n0,2,summary,,,0,0,0,regular,0\n"
            "1,2,0,0,0,,,,,\n1,2,1,0,0,,,,,\n1,2,summary,,,0,0,0,regular,0\n");
}

TEST_F(Cli, AnalyzeDepthOption) {
  const auto net = put("id.json", kIdentityNet), in = put("in.csv", "1,1\n");
  const std::string base = "analyze --network " + q(net) + " --inputs " + q(in) + " --out " + q(dir_ / "r.csv");
  EXPECT_EQ(run(base + " --depth 1"), 0) << err_;
  EXPECT_NE(read_file(dir_ / "r.csv").find("\n0,1,summary"), std::string::npos);
  EXPECT_EQ(run(base + " --depth 0"), 2);
  EXPECT_NE(err_.find("--depth"), std::string::npos);
  EXPECT_EQ(run(base + " --depth 3"), 2);
  EXPECT_EQ(run(base + " --depth two"), 2);
}

TEST_F(Cli, AnalyzeInputErrors) {
  const auto net = put("id.json", kIdentityNet);
  const std::string out = " --out " + q(dir_ / "r.csv");
  EXPECT_EQ(run("analyze --network " + q(net) + " --inputs " + q(put("a.csv", "1,2\n1,x\n")) + out), 2);
  EXPECT_NE(err_.find("a.csv:2: field 2"), std::string::npos) << err_;
  EXPECT_EQ(run("analyze --network " + q(net) + " --inputs " + q(put("b.csv", "1,2,3\n")) + out), 2);
  EXPECT_EQ(run("analyze --network " + q(put("bad.json", "{\"layers\": [")) + " --inputs " +
                q(put("c.csv", "1,2\n")) + out),
            2);
  EXPECT_EQ(run("analyze --network " + q(dir_ / "missing.json") + " --inputs " + q(dir_ / "c.csv") + out), 2);
  EXPECT_FALSE(fs::exists(dir_ / "r.csv"));
}

TEST_F(Cli, AnalyzeNumericFailureNamesRowAndLayer) {
  const auto net = put("big.json", R"({"update_form":"plain","dt":1,"input_dim":1,"layers":[
    {"weights":[[1e200]],"bias":[0],"activation":{"kind":"identity"}},
    {"weights":[[1e200]],"bias":[0],"activation":{"kind":"identity"}}]})");
  const auto in = put("in.csv", "0\n1\n");
  EXPECT_EQ(run("analyze --network " + q(net) + " --inputs " + q(in) + " --out " + q(dir_ / "r.csv")), 3);
  EXPECT_NE(err_.find("input row 1"), std::string::npos) << err_;
  EXPECT_NE(err_.find("layer"), std::string::npos) << err_;
}

TEST_F(Cli, GoldenExampleReport) {
  const fs::path net = kSource / "data/example_net.json", in = kSource / "data/example_inputs.csv";
  const std::string before = read_file(net) + read_file(in);
  ASSERT_EQ(run("analyze --network " + q(net) + " --inputs " + q(in) + " --out " + q(dir_ / "a.csv")), 0) << err_;
  ASSERT_EQ(run("analyze --network " + q(net) + " --inputs " + q(in) + " --out " + q(dir_ / "b.csv")), 0);
  const std::string a = read_file(dir_ / "a.csv");
  EXPECT_EQ(a, read_file(kSource / "tests/golden/example_report.csv"));
  EXPECT_EQ(a, read_file(dir_ / "b.csv"));
  std::size_t summaries = 0;
  for (auto p = a.find(",summary,"); p != std::string::npos; p = a.find(",summary,", p + 1)) ++summaries;
  EXPECT_EQ(summaries, 3u);
  EXPECT_EQ(read_file(net) + read_file(in), before);
}

TEST_F(Cli, GenerateIsByteStable) {
  const fs::path cfg = kSource / "configs/generate_tanh.json";
  ASSERT_EQ(run("generate --config " + q(cfg) + " --out " + q(dir_ / "a.json")), 0) << err_;
  ASSERT_EQ(run("generate --config " + q(cfg) + " --out " + q(dir_ / "b.json")), 0);
  EXPECT_EQ(read_file(dir_ / "a.json"), read_file(dir_ / "b.json"));
  EXPECT_EQ(load_network(dir_ / "a.json").transitions(), 8u);
}

TEST_F(Cli, GenerateColumnSum1ReReads) {
  ASSERT_EQ(run("generate --config " + q(kSource / "configs/generate_column_sum1.json") + " --out " +
                q(dir_ / "n.json")),
            0)
      << err_;
  for (const auto& L : load_network(dir_ / "n.json").layers)
    for (Eigen::Index c = 0; c < L.weights.cols(); ++c) EXPECT_NEAR(L.weights.col(c).sum(), 1.0, 1e-12);
}

TEST_F(Cli, GenerateDelayEmbedDoublesWidth) {
  ASSERT_EQ(run("generate --config " + q(kSource / "configs/generate_delay_embed.json") + " --out " +
                q(dir_ / "n.json")),
            0)
      << err_;
  const auto net = load_network(dir_ / "n.json");
  EXPECT_EQ(net.input_dim, 16);
  for (const auto& L : net.layers) EXPECT_EQ(L.weights.rows(), 16);
}

TEST_F(Cli, GenerateRejectsBadConfig) {
  EXPECT_EQ(run("generate --config " + q(put("g.json", R"({"width_D": 4, "depth_N": 1})")) + " --out " +
                q(dir_ / "n.json")),
            2);
  EXPECT_EQ(run("generate --config " + q(put("h.json", R"({"widht_D": 4})")) + " --out " + q(dir_ / "n.json")), 2);
  EXPECT_NE(err_.find("widht_D"), std::string::npos);
}

TEST_F(Cli, TrainZeroLearningRateEqualsGeneratedNetwork) {
  const auto gen = put("g.json", R"({"width_D": 5, "depth_N": 3, "input_dim": 1, "output_dim": 1, "seed": 9})");
  const auto tr = put("t.json", R"({"network": {"width_D": 5, "depth_N": 3, "seed": 9},
                                    "train": {"learning_rate": 0}})");
  ASSERT_EQ(run("generate --config " + q(gen) + " --out " + q(dir_ / "g.out.json")), 0) << err_;
  ASSERT_EQ(run("train --config " + q(tr) + " --data-kind noisy-sine --out " + q(dir_ / "t.out.json")), 0) << err_;
  EXPECT_EQ(read_file(dir_ / "g.out.json"), read_file(dir_ / "t.out.json"));
  EXPECT_TRUE(fs::exists(dir_ / "t.out.loss.csv"));
}

TEST_F(Cli, TrainLinearDefaultConfig) {
  const std::string args = "train --config " + q(kSource / "configs/train_linear.json") +
                           " --data-kind linear --out " + q(dir_ / "n.json") + " --loss-out ";
  ASSERT_EQ(run(args + q(dir_ / "a.csv")), 0) << err_;
  ASSERT_EQ(run(args + q(dir_ / "b.csv")), 0);
  const std::string loss = read_file(dir_ / "a.csv");
  EXPECT_EQ(loss, read_file(dir_ / "b.csv"));
  const auto last = loss.substr(loss.find_last_of(',', loss.size() - 2) + 1);
  EXPECT_LT(std::stod(last), 1e-4);
  EXPECT_EQ(loss.rfind("epoch,loss\n", 0), 0u);
}

TEST_F(Cli, TrainDivergenceExitsThree) {
  const auto tr = put("t.json", R"({"network": {"width_D": 2, "depth_N": 2, "activation": {"kind": "identity"}},
                                    "train": {"learning_rate": 1000}})");
  EXPECT_EQ(run("train --config " + q(tr) + " --data-kind linear --out " + q(dir_ / "n.json")), 3);
  EXPECT_NE(err_.find("epoch"), std::string::npos) << err_;
  EXPECT_FALSE(fs::exists(dir_ / "n.json"));
}

TEST_F(Cli, TrainUsageErrors) {
  const auto tr = put("t.json", R"({"network": {"width_D": 2, "depth_N": 2}})");
  EXPECT_EQ(run("train --config " + q(tr) + " --data-kind mnist --out " + q(dir_ / "n.json")), 2);
  EXPECT_EQ(run("train --config " + q(put("u.json", "{}")) + " --data-kind linear --out " + q(dir_ / "n.json")), 2);
}

TEST_F(Cli, TrainFromNetworkFile) {
  ASSERT_EQ(run("generate --config " + q(put("g.json", R"({"width_D": 3, "depth_N": 3, "input_dim": 2,
                                                            "output_dim": 2, "seed": 1})")) +
                " --out " + q(dir_ / "net.json")),
            0);
  const auto tr = put("t.json", R"({"network_file": "net.json", "train": {"epochs": 5}})");
  EXPECT_EQ(run("train --config " + q(tr) + " --data-kind two-clusters --out " + q(dir_ / "o.json")), 0) << err_;
  EXPECT_NE(read_file(dir_ / "o.json"), read_file(dir_ / "net.json"));
}

TEST_F(Cli, ExperimentUnknownName) {
  EXPECT_EQ(run("experiment spin-glass --out " + q(dir_)), 2);
  EXPECT_NE(err_.find("width-scaling"), std::string::npos);
  EXPECT_NE(err_.find("prune"), std::string::npos);
}

TEST_F(Cli, ExperimentRerunIsIdentical) {
  const auto cfg = put("c.json", R"({"depths": [1, 2, 4], "seeds": 3})");
  ASSERT_EQ(run("experiment depth-profile --config " + q(cfg) + " --out " + q(dir_ / "a")), 0) << err_;
  ASSERT_EQ(run("experiment depth-profile --config " + q(cfg) + " --out " + q(dir_ / "b")), 0);
  EXPECT_EQ(read_file(dir_ / "a/depth-profile.csv"), read_file(dir_ / "b/depth-profile.csv"));
  EXPECT_EQ(read_file(dir_ / "a/depth-profile.meta.json"), read_file(dir_ / "b/depth-profile.meta.json"));
}

TEST_F(Cli, ExperimentThreadCountDoesNotChangeOutput) {
  const auto cfg = put("c.json", R"({"widths": [4, 8, 16], "seeds": 6})");
  ASSERT_EQ(run("experiment width-scaling --config " + q(cfg) + " --out " + q(dir_ / "a")), 0) << err_;
  ASSERT_EQ(std::system(("LYAPNET_THREADS=1 \"" + std::string(LYAPNET_CLI) + "\" experiment width-scaling --config " +
                         q(cfg) + " --out " + q(dir_ / "b") + " 2>/dev/null")
                            .c_str()),
            0);
  EXPECT_EQ(read_file(dir_ / "a/width-scaling.csv"), read_file(dir_ / "b/width-scaling.csv"));
  EXPECT_NE(read_file(dir_ / "a/width-scaling.csv").find("\nfit,"), std::string::npos);
}

TEST_F(Cli, ExperimentBadConfig) {
  EXPECT_EQ(run("experiment prune --config " + q(put("c.json", R"({"fractions": [0.5]})")) + " --out " + q(dir_)), 2);
  EXPECT_EQ(run("experiment prune --config " + q(put("d.json", R"({"fraction": [0]})")) + " --out " + q(dir_)), 2);
}
