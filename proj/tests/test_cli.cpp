#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rwb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = rwb::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rwb-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out(const std::string& sub = "out") const { return (dir_ / sub).string(); }
  std::string cache() const { return (dir_ / "cache").string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, EnumerateBoundary) {
  auto r = run_cli({"enumerate", "--d", "3", "--n", "2", "--functional", "boundary", "--out-dir", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("P(2) = 1/6"), std::string::npos);
  EXPECT_NE(r.out.find("P(3) = 5/6"), std::string::npos);
  EXPECT_NE(r.out.find("mean = 17/6"), std::string::npos);
  auto csv = slurp(fs::path(out()) / "enumerate.csv");
  EXPECT_NE(csv.find("functional,n,value,count,denominator,probability"), std::string::npos);
  EXPECT_NE(csv.find("boundary,2,3,30,36,5/6"), std::string::npos);
  auto manifest = nlohmann::json::parse(slurp(fs::path(out()) / "manifest.json"));
  EXPECT_EQ(manifest["schema_version"], 1);
  EXPECT_EQ(manifest["subcommand"], "enumerate");
  EXPECT_EQ(manifest["result"]["mean"], "17/6");
  EXPECT_EQ(manifest["outputs"][0], "enumerate.csv");
}

TEST_F(CliTest, GreenBuildThenSelftest) {
  auto a = run_cli({"green-build", "--d", "3", "--radius", "10", "--tol", "1e-8", "--cache-dir", cache(), "--out-dir", out()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_TRUE(fs::exists(fs::path(out()) / "green_table.txt"));
  auto manifest = nlohmann::json::parse(slurp(fs::path(out()) / "manifest.json"));
  EXPECT_EQ(manifest["green_table"]["radius"], 10);
  EXPECT_EQ(manifest["green_table"]["fingerprint"].get<std::string>().size(), 16u);
  auto b = run_cli({"selftest", "--d", "3", "--cache-dir", cache(), "--out-dir", out("self")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(b.out.find("PASS R=10 neighbor_identity"), std::string::npos);
  EXPECT_EQ(b.out.find("FAIL"), std::string::npos);
  // Second build comes from the cache.
  auto c = run_cli({"green-build", "--d", "3", "--radius", "10", "--cache-dir", cache(), "--out-dir", out()});
  EXPECT_NE(c.out.find("(cached)"), std::string::npos);
}

TEST_F(CliTest, SimulateIsDeterministic) {
  auto a = run_cli({"simulate", "--d", "3", "--n", "1000", "--replicas", "10", "--seed", "7", "--out-dir", out("a")});
  auto b = run_cli({"simulate", "--d", "3", "--n", "1000", "--replicas", "10", "--seed", "7", "--workers", "3", "--out-dir", out("b")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  auto x = slurp(fs::path(out("a")) / "simulate.csv");
  EXPECT_EQ(x, slurp(fs::path(out("b")) / "simulate.csv"));
  EXPECT_EQ(x.substr(0, x.find('\n')), "replica,n,range,boundary,class_0,class_1,class_3,class_5,class_7,class_15,class_21,class_23,class_31,class_63");
  // Powers of two up to n, plus n: 11 checkpoints per replica.
  EXPECT_EQ(std::count(x.begin(), x.end(), '\n'), 1 + 10 * 11);
}

TEST_F(CliTest, JsonFormatAndGrid) {
  auto r = run_cli({"simulate", "--d", "4", "--n-grid", "5,50", "--replicas", "3", "--format", "json", "--out-dir", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(fs::path(out()) / "simulate.json"));
  ASSERT_EQ(j.size(), 6u);
  EXPECT_EQ(j[1]["n"], 50);
  EXPECT_EQ(j[0]["boundary"].get<int>(), j[0]["boundary"].get<int>());
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  auto cfg = dir_ / "run.ini";
  std::ofstream(cfg) << "d = 3\nn = 2\nfunctional = range\n";
  auto r = run_cli({"enumerate", "--config", cfg.string(), "--n", "1", "--out-dir", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto manifest = nlohmann::json::parse(slurp(fs::path(out()) / "manifest.json"));
  EXPECT_EQ(manifest["config"]["n"], 1);
  EXPECT_EQ(manifest["config"]["functional"], "range");
}

TEST_F(CliTest, DecomposeDyadicVarianceClt) {
  auto d = run_cli({"decompose", "--d", "3", "--n", "256", "--replicas", "3", "--green-radius", "12", "--cache-dir", cache(), "--out-dir", out("d")});
  ASSERT_EQ(d.code, 0) << d.err;
  auto csv = slurp(fs::path(out("d")) / "decompose.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "replica,n,boundary,A,X,M,E,X_error_bound");
  auto y = run_cli({"dyadic", "--d", "4", "--n", "1024", "--replicas", "4", "--out-dir", out("y")});
  ASSERT_EQ(y.code, 0) << y.err;
  auto v = run_cli({"variance-scan", "--d", "3", "--n-grid", "64,128", "--replicas", "40", "--functional", "range", "--out-dir", out("v")});
  ASSERT_EQ(v.code, 0) << v.err;
  auto c = run_cli({"clt-test", "--d", "5", "--n", "200", "--replicas", "200", "--out-dir", out("c")});
  ASSERT_EQ(c.code, 0) << c.err;
  auto m = nlohmann::json::parse(slurp(fs::path(out("c")) / "manifest.json"));
  EXPECT_EQ(m["result"]["ks_threshold"], 0.05);
  auto e = run_cli({"estimate-nu", "--d", "3", "--n", "2000", "--replicas", "200", "--horizon", "500", "--green-radius", "12",
                    "--cache-dir", cache(), "--out-dir", out("e")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(fs::exists(fs::path(out("e")) / "estimate_nu.csv"));
}

TEST_F(CliTest, ErrorsAndExitCodes) {
  auto bad = run_cli({"simulate", "--bogus"});
  EXPECT_EQ(bad.code, 2);
  auto j = nlohmann::json::parse(bad.err);
  EXPECT_EQ(j["error"]["category"], "usage");
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--d", "2", "--out-dir", out()}).code, 2);
  EXPECT_EQ(run_cli({"clt-test", "--replicas", "10", "--out-dir", out()}).code, 2);
  EXPECT_EQ(run_cli({"enumerate", "--n", "12", "--out-dir", out()}).code, 2);
  EXPECT_EQ(run_cli({"enumerate", "--functional", "nope", "--out-dir", out()}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--format", "xml", "--out-dir", out()}).code, 2);
  // Far too strict a tolerance cannot be reached.
  auto num = run_cli({"green-build", "--radius", "4", "--tol", "1e-19", "--cache-dir", "", "--out-dir", out()});
  EXPECT_EQ(num.code, 3);
  EXPECT_EQ(nlohmann::json::parse(num.err)["error"]["category"], "numerical");
  auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("green-build"), std::string::npos);
}
