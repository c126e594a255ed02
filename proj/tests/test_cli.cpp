#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gtvtest/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = GTVTEST_CLI_PATH;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gtvtest_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = kCli + " " + args + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  nlohmann::json report(const std::string& name) const {
    return nlohmann::json::parse(read(name));
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateLocalizedSupport) {
  ASSERT_EQ(run("simulate --design localized --eta 0.1 --s 0 --n 100 --seed 1 --out " +
                path("s.csv")),
            0);
  const auto t = gtvtest::io::read_csv_file(path("s.csv"));
  ASSERT_EQ(t.rows.size(), 100u);
  for (const auto& p : gtvtest::io::read_points(t)) {
    EXPECT_EQ(p.dim(), 2u);
    for (double c : p.coords) {
      EXPECT_GT(c, 0.0);
      EXPECT_LE(c, 1.0);
    }
  }
}

TEST_F(CliTest, TestReportLatticeAndWitness) {
  ASSERT_EQ(run("simulate --design localized --eta 0.5 --s 2 --n1 40 --n2 40 --seed 2 --out " +
                path("d.csv")),
            0);
  ASSERT_EQ(run("test --data " + path("d.csv") +
                " --knn 10 --B 199 --alpha 0.05 --seed 7 --out " + path("r.json") +
                " --witness-out " + path("w.csv")),
            0);
  const auto j = report("r.json");
  const double k = j["p_value"].get<double>() * 200.0;
  EXPECT_NEAR(k, std::round(k), 1e-9);
  EXPECT_GE(k, 1.0 - 1e-9);
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["n_permutations"], 199);
  EXPECT_EQ(j["graph_meta"]["type"], "knn");
  const auto w = gtvtest::io::read_csv_file(path("w.csv"));
  EXPECT_EQ(w.rows.size(), 80u);
  EXPECT_TRUE(w.column("in_witness").has_value());
  EXPECT_TRUE(w.column("label").has_value());
}

TEST_F(CliTest, PooledAndTwoFileFormsAgree) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::ofstream x(path("x.csv")), y(path("y.csv")), pooled(path("p.csv"));
  x << "x1,x2\n";
  y << "x1,x2\n";
  pooled << "grp,x1,x2\n";
  for (int i = 0; i < 30; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    x << a << ',' << b << '\n';
    y << c << ',' << d << '\n';
    pooled << "x," << a << ',' << b << '\n' << "y," << c << ',' << d << '\n';
  }
  x.close();
  y.close();
  pooled.close();
  const std::string common = " --knn 8 --B 49 --seed 11 --threads 1";
  ASSERT_EQ(run("test --x " + path("x.csv") + " --y " + path("y.csv") + common + " --out " +
                path("a.json")),
            0);
  ASSERT_EQ(run("test --data " + path("p.csv") + " --label-column grp" + common + " --out " +
                path("b.json")),
            0);
  auto a = report("a.json"), b = report("b.json");
  EXPECT_EQ(a["statistic_exact"], b["statistic_exact"]);
  EXPECT_EQ(a["p_value"], b["p_value"]);
}

TEST_F(CliTest, ByteIdenticalApartFromRuntime) {
  ASSERT_EQ(run("simulate --design localized --eta 0.25 --s 1 --n1 50 --n2 50 --seed 4 --out " +
                path("d.csv")),
            0);
  const std::string args = "test --data " + path("d.csv") + " --eps auto --B 59 --seed 5 ";
  ASSERT_EQ(run(args + "--threads 1 --out " + path("a.json")), 0);
  ASSERT_EQ(run(args + "--threads 3 --out " + path("b.json")), 0);
  auto strip = [](std::string s) {
    const auto pos = s.find("\"runtime_ms\"");
    return s.substr(0, pos);
  };
  EXPECT_EQ(strip(read("a.json")), strip(read("b.json")));
  EXPECT_NE(strip(read("a.json")).size(), 0u);
}

TEST_F(CliTest, AutoRadiusUsesDefaultFormula) {
  ASSERT_EQ(run("simulate --design localized --eta 0.5 --s 1 --n1 60 --n2 60 --seed 6 --out " +
                path("d.csv")),
            0);
  ASSERT_EQ(run("test --data " + path("d.csv") + " --eps auto --B-density 3 --B 19 --out " +
                path("r.json")),
            0);
  EXPECT_DOUBLE_EQ(report("r.json")["graph_meta"]["parameter"].get<double>(),
                   gtvtest::default_radius(120, 2, 3.0));
}

TEST_F(CliTest, ChisqSingleCell) {
  ASSERT_EQ(run("simulate --design localized --eta 0.5 --s 2 --n1 30 --n2 20 --seed 7 --out " +
                path("d.csv")),
            0);
  ASSERT_EQ(run("chisq --data " + path("d.csv") + " --bin 1 --B 99 --out " + path("r.json")), 0);
  const auto j = report("r.json");
  EXPECT_EQ(j["p_value"], 1.0);
  EXPECT_EQ(j["method"], "chi_squared");
}

TEST_F(CliTest, BinnedGofRegtest) {
  ASSERT_EQ(run("simulate --design localized --eta 0.5 --s 2 --n1 50 --n2 50 --seed 8 --out " +
                path("d.csv")),
            0);
  ASSERT_EQ(run("binned --data " + path("d.csv") + " --bin 0.25 --B 19 --out " + path("b.json") +
                " --witness-out " + path("bw.csv")),
            0);
  EXPECT_EQ(report("b.json")["method"], "binned_graph_tv");
  EXPECT_EQ(gtvtest::io::read_csv_file(path("bw.csv")).rows.size(), 100u);

  ASSERT_EQ(run("simulate --design localized --eta 0.1 --s 0 --n 60 --seed 9 --out " +
                path("g.csv")),
            0);
  ASSERT_EQ(run("gof --x " + path("g.csv") + " --reference-uniform 2 --knn 8 --B 19 --out " +
                path("g.json")),
            0);
  ASSERT_EQ(run("gof --x " + path("g.csv") + " --reference " + path("g.csv") +
                " --eps 0.3 --B 19 --out " + path("g2.json")),
            0);

  std::ofstream r(path("reg.csv"));
  r << "x1,residual\n";
  for (int i = 0; i < 40; ++i) r << i / 40.0 << ',' << (i % 3) - 1.0 << '\n';
  r.close();
  ASSERT_EQ(run("regtest --data " + path("reg.csv") + " --knn 4 --B 19 --out " +
                path("r.json")),
            0);
  EXPECT_GT(report("r.json")["statistic"].get<double>(), 0.0);
}

TEST_F(CliTest, PowerSingleTrial) {
  ASSERT_EQ(run("power --design localized --eta 0.25 --s 2 --n1 40 --n2 40 --trials 1 "
                "--methods chi_squared,binned_graph_tv --bin 0.25 --seed 1 --out " +
                path("p.csv")),
            0);
  const auto t = gtvtest::io::read_csv_file(path("p.csv"));
  ASSERT_EQ(t.rows.size(), 2u);
  for (double auc : gtvtest::io::read_column(t, "auc"))
    EXPECT_TRUE(auc == 0.0 || auc == 0.5 || auc == 1.0);
  ASSERT_EQ(run("power --design illustrative --n1 60 --n2 60 --trials 2 --methods graph_tv "
                "--format json --seed 1 --out " + path("p.json")),
            0);
  EXPECT_EQ(report("p.json")["rows"].size(), 1u);
}

TEST_F(CliTest, SimulateRoundTripIntoTest) {
  ASSERT_EQ(run("simulate --design illustrative --n1 80 --n2 80 --seed 3 --out " +
                path("i.csv")),
            0);
  const auto ts = gtvtest::io::read_labelled(gtvtest::io::read_csv_file(path("i.csv")), "label");
  const auto direct = gtvtest::sample_illustrative(80, 80, 0.02, 0.5, gtvtest::Point{1.0, 5.0},
                                                   gtvtest::Point{5.0, 1.0}, 3);
  EXPECT_EQ(ts.points(), direct.points());
  EXPECT_EQ(run("test --data " + path("i.csv") + " --knn 10 --B 9 --out " + path("r.json")), 0);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("test --x " + path("missing.csv") + " --y " + path("missing.csv") + " --knn 3"), 2);
  EXPECT_EQ(run("test --bogus"), 2);
  EXPECT_EQ(run(""), 2);
  std::ofstream bad(path("bad.csv"));
  bad << "x1,label\nfoo,x\n1,y\n";
  bad.close();
  EXPECT_EQ(run("test --data " + path("bad.csv") + " --knn 1"), 2);
  std::ofstream far(path("far.csv"));
  far << "x1,label\n0,x\n0.1,x\n5,y\n5.1,y\n";
  far.close();
  EXPECT_EQ(run("test --data " + path("far.csv") + " --eps 0.5 --B 9"), 3);
  EXPECT_NE(read("stderr.txt").find("increase eps or k"), std::string::npos);
  EXPECT_EQ(run("test --data " + path("far.csv") + " --eps 0.5 --knn 2"), 2);
  EXPECT_EQ(run("test --data " + path("far.csv") + " --eps nope"), 2);
}

TEST_F(CliTest, ThreadEnvironmentVariable) {
  ASSERT_EQ(run("simulate --design localized --eta 0.5 --s 1 --n1 30 --n2 30 --seed 2 --out " +
                path("d.csv")),
            0);
  EXPECT_EQ(run("test --data " + path("d.csv") + " --knn 8 --B 9 --out " + path("a.json")), 0);
  const std::string env_bad = "GTVTEST_THREADS=abc ";
  EXPECT_EQ(std::system((env_bad + kCli + " test --data " + path("d.csv") +
                         " --knn 8 --B 9 > /dev/null 2>&1").c_str()) >> 8,
            2);
  // the flag wins over the environment
  EXPECT_EQ(std::system((env_bad + kCli + " test --data " + path("d.csv") +
                         " --knn 8 --B 9 --threads 2 > /dev/null 2>&1").c_str()) >> 8,
            0);
}
