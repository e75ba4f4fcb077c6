#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>
#include <vector>

#include "gnnx/cli/cli.hpp"
#include "gnnx/gnn/model.hpp"
#include "gnnx/tensor/checkpoint.hpp"
#include "json.hpp"

namespace gnnx {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CliRun run_cli(const fs::path& cwd, const std::string& args, const std::string& env = "") {
  const fs::path o = cwd / ".stdout", e = cwd / ".stderr";
  const std::string cmd = "cd '" + cwd.string() + "' && " + env + " '" + GNNX_CLI_PATH + "' " + args + " >'" +
                          o.string() + "' 2>'" + e.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

// One small pipeline shared by the suite: data, a GIN, a maskgen and a
// random explainer, and their explanations of the test split.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("gnnx_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    must("gen-data --dataset ba2motifs --count 160 --seed 4 --unseen-fraction 0.15 --out data.json");
    must("train-gnn --data data.json --out model.bin --seed 4 --epochs 30 --patience 10");
    must("train-explainer --data data.json --model model.bin --family maskgen --epochs 3 --out mg.bin");
    must("train-explainer --data data.json --model model.bin --family random --seed 2 --out rnd.bin");
    must("explain --explainer mg.bin --model model.bin --data data.json --out ex_mg");
    must("explain --explainer rnd.bin --model model.bin --data data.json --split all --out ex_rnd");
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static void must(const std::string& args) {
    const CliRun r = run_cli(dir_, args);
    ASSERT_EQ(r.code, 0) << args << "\n" << r.err;
  }

  static fs::path dir_;
};
fs::path CliPipeline::dir_;

TEST(Cli, HelpAndParseErrors) {
  const fs::path cwd = fs::temp_directory_path();
  EXPECT_EQ(run_cli(cwd, "--help").code, 0);
  EXPECT_EQ(run_cli(cwd, "explain --help").code, 0);
  EXPECT_EQ(run_cli(cwd, "").code, 2);
  EXPECT_EQ(run_cli(cwd, "no-such-command").code, 2);
  EXPECT_EQ(run_cli(cwd, "gen-data --count notanumber --out x.json").code, 2);
  EXPECT_EQ(run_cli(cwd, "gen-data --count -3 --out x.json").code, 2);
  EXPECT_EQ(run_cli(cwd, "train-gnn --data x.json").code, 2);  // --out missing
}

TEST_F(CliPipeline, GenDataRejectsBadArguments) {
  CliRun r = run_cli(dir_, "gen-data --count 0 --out zero.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--count"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "zero.json"));
  r = run_cli(dir_, "gen-data --dataset tree_cycles --out t.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("tree_cycles"), std::string::npos);
  EXPECT_EQ(run_cli(dir_, "gen-data --unseen-fraction 1.5 --out t.json").code, 2);
}

TEST_F(CliPipeline, GenDataIsDeterministic) {
  must("gen-data --count 40 --seed 9 --out a.json");
  must("gen-data --count 40 --seed 9 --out b.json");
  must("gen-data --count 40 --seed 10 --out c.json");
  EXPECT_EQ(slurp(dir_ / "a.json"), slurp(dir_ / "b.json"));
  EXPECT_NE(slurp(dir_ / "a.json"), slurp(dir_ / "c.json"));
  EXPECT_TRUE(fs::exists(dir_ / "a.json.resolved.json"));
}

TEST_F(CliPipeline, MissingInputIsNamed) {
  const CliRun r = run_cli(dir_, "train-gnn --data absent.json --out m.bin");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("absent.json"), std::string::npos);
}

TEST_F(CliPipeline, DivergentTrainingExitsWithNumericalCode) {
  const CliRun r = run_cli(dir_, "train-gnn --data data.json --out diverged.bin --lr 1e200 --epochs 3");
  EXPECT_EQ(r.code, 4) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "diverged.bin"));
}

TEST_F(CliPipeline, ExplainIsIdempotentUpToWallTime) {
  must("explain --explainer mg.bin --model model.bin --data data.json --out ex_again");
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "ex_mg")) {
    const fs::path other = dir_ / "ex_again" / entry.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    Json a = Json::parse(slurp(entry.path())), b = Json::parse(slurp(other));
    if (entry.path().filename() == "resolved_config.json") {
      a.erase("output");
      b.erase("output");
    }
    a.erase("wall_time_ms");
    b.erase("wall_time_ms");
    EXPECT_EQ(a, b) << entry.path().filename();
    ++files;
  }
  EXPECT_GT(files, 2u);
}

TEST_F(CliPipeline, ExplainRemovesStaleExplanations) {
  fs::create_directories(dir_ / "ex_stale");
  std::ofstream(dir_ / "ex_stale" / "g999999.json") << "{}";
  must("explain --explainer mg.bin --model model.bin --data data.json --out ex_stale");
  EXPECT_FALSE(fs::exists(dir_ / "ex_stale" / "g999999.json"));
}

TEST_F(CliPipeline, HashMismatchIsAnIntegrityFailure) {
  must("train-gnn --data data.json --out other.bin --seed 5 --epochs 2");
  CliRun r = run_cli(dir_, "explain --explainer mg.bin --model other.bin --data data.json --out ex_bad");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("hash mismatch"), std::string::npos) << r.err;
  r = run_cli(dir_, "evaluate --explanations ex_mg --model other.bin --data data.json --out bad");
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(fs::exists(dir_ / "bad.json"));
}

TEST_F(CliPipeline, EvaluateRejectsEmptyExplanationDirectory) {
  fs::create_directories(dir_ / "ex_empty");
  const CliRun r = run_cli(dir_, "evaluate --explanations ex_empty --model model.bin --data data.json --out e");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ex_empty"), std::string::npos);
}

TEST_F(CliPipeline, RandomFamilyScoresChanceAuc) {
  must("evaluate --explanations ex_rnd --model model.bin --data data.json --out rep_rnd");
  const Json j = Json::parse(slurp(dir_ / "rep_rnd.json"));
  EXPECT_EQ(j["family"], "random");
  EXPECT_EQ(j["num_records"], 160);
  EXPECT_NEAR(j["gt_auc"].get<double>(), 0.5, 0.05);
  EXPECT_DOUBLE_EQ(j["faithfulness"].get<double>(), 1.0 - j["fidelity_acc"].get<double>());
}

TEST_F(CliPipeline, EvaluateWritesAConsistentReport) {
  must("evaluate --explanations ex_mg --model model.bin --data data.json --out rep_mg --generalization --workers 3");
  const Json j = Json::parse(slurp(dir_ / "rep_mg.json"));
  const std::string csv = slurp(dir_ / "rep_mg.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), j["num_records"].get<long>() + 1);
  EXPECT_TRUE(j["generalization_discrepancy"].is_number());
  EXPECT_GE(j["faithfulness"].get<double>(), 0.0);
  EXPECT_LE(j["faithfulness"].get<double>(), 1.0);
}

TEST_F(CliPipeline, GeneralizationNeedsAnUnseenSplit) {
  must("gen-data --count 30 --seed 1 --out nounseen.json");
  const CliRun r = run_cli(dir_, "evaluate --explanations ex_mg --model model.bin --data nounseen.json --out x "
                              "--generalization");
  EXPECT_NE(r.code, 0);
}

bool well_formed_svg(const std::string& svg) {
  if (svg.rfind("<?xml", 0) != 0) return false;
  static const std::regex tag(R"(<(/?)([A-Za-z][A-Za-z0-9:-]*)[^>]*?(/?)>)");
  std::vector<std::string> stack;
  std::size_t roots = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::string name = m[2];
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (m[3] != "/") {
      if (stack.empty()) ++roots;
      stack.push_back(name);
    }
  }
  // Bare ampersands would break any XML parser.
  static const std::regex bare_amp(R"(&(?!amp;|lt;|gt;|quot;|apos;))");
  return stack.empty() && roots == 1 && !std::regex_search(svg, bare_amp);
}

TEST_F(CliPipeline, ReportRendersChartsAndTable) {
  must("evaluate --explanations ex_mg --model model.bin --data data.json --out r_mg --generalization");
  must("evaluate --explanations ex_rnd --model model.bin --data data.json --out r_rnd");
  const CliRun r = run_cli(dir_, "report --reports r_mg.json r_rnd.json --out charts");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("maskgen"), std::string::npos);
  EXPECT_NE(r.out.find("random"), std::string::npos);
  for (const char* name : {"faithfulness.svg", "inference_time.svg", "generalization.svg"}) {
    const std::string svg = slurp(dir_ / "charts" / name);
    EXPECT_TRUE(well_formed_svg(svg)) << name;
    EXPECT_NE(svg.find("<rect"), std::string::npos) << name;
  }
  EXPECT_EQ(slurp(dir_ / "charts" / "summary.txt"), r.out.substr(0, r.out.rfind("wrote")));
}

TEST_F(CliPipeline, ReportRefusesToMergeDatasets) {
  must("evaluate --explanations ex_rnd --model model.bin --data data.json --out m1");
  Json j = Json::parse(slurp(dir_ / "m1.json"));
  j["dataset"] = "ba_multishapes";
  std::ofstream(dir_ / "m2.json") << j.dump(2);
  const CliRun r = run_cli(dir_, "report --reports m1.json m2.json --out merged");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ba_multishapes"), std::string::npos);
}

TEST_F(CliPipeline, ConfigValidationAndPrecedence) {
  std::ofstream(dir_ / "bad.json") << R"({"datasets": {}})";
  EXPECT_EQ(run_cli(dir_, "gen-data --config bad.json --out x.json").code, 2);
  std::ofstream(dir_ / "noseeds.json") << R"({"eval": {"k": 6}})";
  EXPECT_EQ(run_cli(dir_, "gen-data --config noseeds.json --out x.json").code, 2);
  std::ofstream(dir_ / "missing.json") << R"({"dataset": {"path": "nowhere.json"}})";
  const CliRun missing = run_cli(dir_, "train-gnn --config missing.json --data data.json --out x.bin");
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("nowhere.json"), std::string::npos);

  std::ofstream(dir_ / "cfg.json") << R"({"gnn": {"hidden_dim": 8, "max_epochs": 2}, "eval": {"seeds": [0]}})";
  must("train-gnn --config cfg.json --data data.json --out cfg_model.bin");
  Json resolved = Json::parse(slurp(dir_ / "cfg_model.bin.resolved.json"));
  EXPECT_EQ(resolved["gnn"]["hidden_dim"], 8);
  must("train-gnn --config cfg.json --data data.json --out cfg_model.bin --hidden 12");
  resolved = Json::parse(slurp(dir_ / "cfg_model.bin.resolved.json"));
  EXPECT_EQ(resolved["gnn"]["hidden_dim"], 12);
  EXPECT_EQ(resolved["gnn"]["max_epochs"], 2);
}

TEST_F(CliPipeline, OutputRootAnchorsRelativePaths) {
  const fs::path root = dir_ / "root";
  fs::create_directories(root);
  const CliRun r = run_cli(dir_, "gen-data --count 20 --out rooted.json",
                        std::string(kOutputRootEnv) + "='" + root.string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "rooted.json"));
  EXPECT_FALSE(fs::exists(dir_ / "rooted.json"));
}

TEST_F(CliPipeline, ModelLevelWritesItsSubgraph) {
  must("train-explainer --data data.json --model model.bin --family model_level --epochs 1 --target-class 1 "
       "--out ml.bin");
  const Json j = Json::parse(slurp(dir_ / "ml.bin.model_level.json"));
  EXPECT_EQ(j["target_class"], 1);
  EXPECT_GT(j["edges"].size(), 0u);
  EXPECT_LE(j["support"].get<std::size_t>(), j["instances"].get<std::size_t>());
}

// A run killed at an arbitrary moment leaves either no checkpoint or one that
// loads; never a truncated file.
TEST_F(CliPipeline, KilledTrainingLeavesNoPartialCheckpoint) {
  for (int attempt = 0; attempt < 6; ++attempt) {
    const fs::path out = dir_ / ("killed" + std::to_string(attempt) + ".bin");
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
      if (::chdir(dir_.c_str()) != 0) ::_exit(126);
      const std::string out_arg = out.string();
      ::execl(GNNX_CLI_PATH, GNNX_CLI_PATH, "train-gnn", "--data", "data.json", "--out", out_arg.c_str(), "--epochs",
              "8", "--patience", "8", static_cast<char*>(nullptr));
      ::_exit(127);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(60 * attempt));
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (fs::exists(out)) {
      EXPECT_NO_THROW(load_model(out)) << "attempt " << attempt;
    }
  }
}

}  // namespace
}  // namespace gnnx
