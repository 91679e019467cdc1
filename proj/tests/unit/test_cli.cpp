#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "mumanifold/errors.hpp"
#include "mumanifold_cli/cli.hpp"

using namespace mumanifold;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mumanifold_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  std::vector<std::string> coarse(std::vector<std::string> args, const fs::path& out) const {
    for (const char* a : {"--tstep", "0.1", "--xi-step", "0.05", "--out"}) args.emplace_back(a);
    args.push_back(out.string());
    return args;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST(CliConfig, ResolveDelta) {
  const auto bounds = delta_max(1.0, 2.0, 0.2, -1.0, 1.0);
  EXPECT_EQ(cli::resolve_delta("0.01", bounds), 0.01);
  EXPECT_DOUBLE_EQ(cli::resolve_delta("auto:0.5", bounds), 0.5 / 35.0);
  EXPECT_THROW(cli::resolve_delta("auto:", bounds), ConfigError);
  EXPECT_THROW(cli::resolve_delta("fast", bounds), ConfigError);
  EXPECT_THROW(cli::resolve_delta("-1", bounds), ConfigError);
  EXPECT_THROW(cli::resolve_delta("0.1x", bounds), ConfigError);
}

TEST(CliConfig, JsonRoundTripAndErrors) {
  cli::RunConfig cfg;
  cfg.growth = "exp:c=0.5";
  cfg.solver.t_step = 0.1;
  cfg.spec_eps = 0.0;
  const auto back = cli::config_from_json(cli::config_to_json(cfg));
  EXPECT_EQ(back.growth, "exp:c=0.5");
  EXPECT_EQ(back.solver.t_step, 0.1);
  EXPECT_EQ(back.spec_eps, 0.0);
  EXPECT_EQ(cli::config_to_json(back), cli::config_to_json(cfg));
  EXPECT_THROW(cli::config_from_json(json{{"unknown", 1}}), ConfigError);
  EXPECT_THROW(cli::config_from_json(json{{"eps", "big"}}), ConfigError);
  EXPECT_THROW(cli::config_from_json(json::array()), ConfigError);
  EXPECT_EQ(cli::config_from_json(json{{"delta", 0.01}}).delta, "0.01");
}

TEST(CliConfig, DefaultsAreCanonicalInstance) {
  const auto problem = cli::build_problem(cli::RunConfig{});
  EXPECT_EQ(problem.growth().label(), make_growth(GrowthKind::polynomial).label());
  EXPECT_EQ(problem.C(), 2.0);
  EXPECT_DOUBLE_EQ(problem.f.delta(), 0.5 / 35.0);
  EXPECT_EQ(problem.spec.eps, 0.2);
}

TEST_F(CliTest, DichotomyPassesAndWritesArtifacts) {
  EXPECT_EQ(run({"dichotomy", "--out", dir_.string()}), 0);
  const json report = json::parse(slurp(dir_ / "dichotomy_report.json"));
  EXPECT_TRUE(report["pass"]);
  EXPECT_NEAR(report["report"]["D_min_U"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(report["witness"].size(), 5u);
  EXPECT_EQ(slurp(dir_ / "witness.csv").rfind("k,t,s,ratio,mu_s_pow_eps\n", 0), 0u);
}

TEST_F(CliTest, DichotomyUniformSpecFails) {
  EXPECT_EQ(run({"dichotomy", "--spec-eps", "0", "--out", dir_.string()}), 1);
}

TEST_F(CliTest, MalformedInputsExitTwo) {
  EXPECT_EQ(run({"dichotomy", "--growth", "cubic", "--out", dir_.string()}), 2);
  EXPECT_EQ(run({"dichotomy", "--a", "oops"}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"solve", "--config", (dir_ / "missing.json").string()}), 2);
}

TEST_F(CliTest, DeltaAboveThresholdExitsTwo) {
  EXPECT_EQ(run(coarse({"solve", "--delta", "auto:2.0"}, dir_)), 2);
  EXPECT_NE(err_.str().find("delta_max"), std::string::npos);
}

TEST_F(CliTest, DeltaCommandPrintsBounds) {
  EXPECT_EQ(run({"delta", "--eps", "0.1"}), 0);
  const json j = json::parse(out_.str());
  EXPECT_NEAR(j["delta_max"].get<double>(), 1.0 / 70.0, 1e-15);
  EXPECT_EQ(j["bounds"].size(), 7u);
}

TEST_F(CliTest, ConfigFileOverriddenByFlags) {
  std::ofstream(dir_ / "cfg.json") << R"({"eps": 0.1, "bigC": 4.0})";
  EXPECT_EQ(run({"delta", "--config", (dir_ / "cfg.json").string(), "--bigC", "2"}), 0);
  const json j = json::parse(out_.str());
  EXPECT_EQ(j["eps"], 0.1);
  EXPECT_EQ(j["C"], 2.0);
  std::ofstream(dir_ / "bad.json") << R"({"eps": 0.1,)";
  EXPECT_EQ(run({"delta", "--config", (dir_ / "bad.json").string()}), 2);
}

TEST_F(CliTest, ZeroShapeSolveAndVerify) {
  ASSERT_EQ(run(coarse({"solve", "--shape", "zero"}, dir_)), 0);
  const json diag = json::parse(slurp(dir_ / "diagnostics.json"));
  EXPECT_EQ(diag["outer"]["iterations"], 1);
  const GraphFunction phi = graph_from_json(json::parse(slurp(dir_ / "phi.json")));
  EXPECT_EQ(phi.values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(run(coarse({"verify", "--shape", "zero"}, dir_)), 0) << err_.str();
  const json report = json::parse(slurp(dir_ / "verify_report.json"));
  EXPECT_TRUE(report["pass"]);
  EXPECT_LE(report["invariance"]["max_residual"].get<double>(), 1e-8);
}

TEST_F(CliTest, SolveVerifyRoundTripIsBitExact) {
  ASSERT_EQ(run(coarse({"solve"}, dir_)), 0) << err_.str();
  cli::RunConfig cfg;
  cfg.solver.t_step = 0.1;
  cfg.solver.xi_step = 0.05;
  const auto memory = solve_manifold(cli::build_problem(cfg));
  const GraphFunction loaded = graph_from_json(json::parse(slurp(dir_ / "phi.json")));
  EXPECT_TRUE(loaded.values == memory.phi.values);
  EXPECT_EQ(run(coarse({"verify"}, dir_)), 0) << err_.str() << out_.str();
  EXPECT_TRUE(fs::exists(dir_ / "semiflow_k0.csv"));
}

TEST_F(CliTest, OutputsAreDeterministic) {
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  ASSERT_EQ(run(coarse({"solve", "--threads", "1"}, a)), 0);
  ASSERT_EQ(run(coarse({"solve", "--threads", "4"}, b)), 0);
  for (const char* f : {"phi.json", "phi.csv", "diagnostics.json", "trajectory_s0.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST_F(CliTest, VerifyRejectsCorruptedOrMismatchedGraph) {
  ASSERT_EQ(run(coarse({"solve", "--shape", "zero"}, dir_)), 0);
  json doc = json::parse(slurp(dir_ / "phi.json"));
  doc["s_grid"]["count"] = 3;
  std::ofstream(dir_ / "corrupt.json") << doc.dump();
  EXPECT_EQ(run(coarse({"verify", "--shape", "zero", "--phi", (dir_ / "corrupt.json").string()}, dir_)), 2);
  EXPECT_EQ(run({"verify", "--shape", "zero", "--out", dir_.string()}), 2);
  EXPECT_EQ(run(coarse({"verify", "--phi", (dir_ / "nope.json").string()}, dir_)), 2);
}
