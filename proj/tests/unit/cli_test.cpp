#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "dcre/io.hpp"
#include "json.hpp"

namespace dcre {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dcre_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> small_args(const std::string& command, const fs::path& out) {
  std::vector<std::string> args{command, "--out", out.string()};
  for (const char* kv : {"model.word_dim=6", "model.position_dim=2", "model.filters=8", "model.max_len=20",
                         "model.max_dist=10", "train.batch_size=32", "train.epochs_pretrain=1",
                         "train.epochs_final=1", "cluster.runs=2", "cluster.epochs=1", "cluster.c_min=2",
                         "cluster.c_max=50", "synthetic.bags=100", "synthetic.test_bags=30",
                         "synthetic.positive_relations=4", "synthetic.template_max_len=12"}) {
    args.push_back("--set");
    args.push_back(kv);
  }
  return args;
}

TEST(Cli, UnknownCommandIsAUsageError) {
  const auto r = invoke({"frobnicate"});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("unknown command"), std::string::npos);
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"all", "--bogus"}).code, cli::kUsage);
}

TEST(Cli, HelpSucceeds) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("sweep-phi"), std::string::npos);
}

TEST(Cli, BadConfigValueIsAUsageError) {
  const auto dir = fresh_dir("badcfg");
  auto args = small_args("gen-synth", dir);
  args.push_back("--set");
  args.push_back("train.phi=1.5");
  const auto r = invoke(args);
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("train.phi"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, MissingConfigFileIsAUsageError) {
  const auto r = invoke({"gen-synth", "--config", "/nonexistent/dcre.ini"});
  EXPECT_EQ(r.code, cli::kUsage);
}

TEST(Cli, TrainBeforeRelabelNamesTheMissingStep) {
  const auto dir = fresh_dir("dep");
  ASSERT_EQ(invoke(small_args("gen-synth", dir)).code, cli::kOk);
  ASSERT_EQ(invoke(small_args("pretrain", dir)).code, cli::kOk);
  const auto r = invoke(small_args("train", dir));
  EXPECT_EQ(r.code, cli::kDependency);
  EXPECT_NE(r.err.find("relabel"), std::string::npos) << r.err;
  const auto e = invoke(small_args("eval", dir));
  EXPECT_EQ(e.code, cli::kDependency);
  fs::remove_all(dir);
}

TEST(Cli, StepwisePipelineWritesArtifacts) {
  const auto dir = fresh_dir("steps");
  for (const char* cmd : {"gen-synth", "pretrain", "cluster", "relabel", "train", "eval", "export-pca"}) {
    const auto r = invoke(small_args(cmd, dir));
    ASSERT_EQ(r.code, cli::kOk) << cmd << ": " << r.err;
  }
  for (const char* f : {"train.jsonl", "test.jsonl", "vocab.json", "pretrain.ckpt", "pretrain_log.csv",
                        "cluster_state.ckpt", "cluster_log.csv", "cluster_votes.json", "relabels.jsonl",
                        "relabel_report.json", "model.ckpt", "model_epoch_01.ckpt", "train_log.csv",
                        "pr_curve.csv", "eval.json", "pca.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(read_file(dir / "pr_curve.csv").substr(0, 22), "precision,recall,score");
  EXPECT_EQ(read_file(dir / "pca.csv").substr(0, 26), "x,y,cluster,original_label");
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_TRUE(manifest.contains("seed"));
  EXPECT_TRUE(manifest.contains("outputs"));
  const auto ev = nlohmann::json::parse(read_file(dir / "eval.json"));
  EXPECT_GE(ev["auc"].get<double>(), 0.0);
  fs::remove_all(dir);
}

TEST(Cli, ZeroThresholdOverrideFlagsNothing) {
  const auto dir = fresh_dir("phi0");
  auto args = small_args("all", dir);
  args.push_back("--set");
  args.push_back("train.phi=0");
  const auto r = invoke(args);
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream lines(read_file(dir / "relabels.jsonl"));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_FALSE(j["noisy"].get<bool>());
    EXPECT_NE(j["outcome"], "relabeled");
    ++count;
  }
  EXPECT_GT(count, 0);
  fs::remove_all(dir);
}

TEST(Cli, SweepWritesOneRowPerThreshold) {
  const auto dir = fresh_dir("sweep");
  ASSERT_EQ(invoke(small_args("gen-synth", dir)).code, cli::kOk);
  auto args = small_args("sweep-phi", dir);
  args.push_back("--phis");
  args.push_back("0.2,0");
  const auto r = invoke(args);
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto csv = read_file(dir / "phi_sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace dcre
