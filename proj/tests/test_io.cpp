#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gtvtest/io.hpp"
#include "test_util.hpp"

using namespace gtvtest;

TEST(Csv, ReadPointsAndLabels) {
  std::istringstream in("x1, x2 ,label\n0.5,0.25,x\n\n1e-3,+2,y\n-0.0,3.5,x\n");
  const auto t = io::read_csv(in);
  ASSERT_EQ(t.rows.size(), 3u);
  const auto pts = io::read_points(t);
  EXPECT_EQ(pts[1], (Point{0.001, 2.0}));
  const TwoSample ts = io::read_labelled(t, "label");
  EXPECT_EQ(ts.n1(), 2u);
  EXPECT_EQ(ts.point(1), (Point{-0.0, 3.5}));
  EXPECT_EQ(ts.point(2), (Point{0.001, 2.0}));
}

TEST(Csv, Errors) {
  std::istringstream ragged("x1,x2\n1,2\n3\n");
  EXPECT_THROW(io::read_csv(ragged), IoError);
  std::istringstream bad("x1\nabc\n");
  EXPECT_THROW(io::read_points(io::read_csv(bad)), IoError);
  std::istringstream trailing("x1\n1.5x\n");
  EXPECT_THROW(io::read_points(io::read_csv(trailing)), IoError);
  std::istringstream nocoord("a,b\n1,2\n");
  EXPECT_THROW(io::read_points(io::read_csv(nocoord)), IoError);
  std::istringstream badlabel("x1,label\n1,z\n");
  EXPECT_THROW(io::read_labelled(io::read_csv(badlabel), "label"), IoError);
  std::istringstream empty("");
  EXPECT_THROW(io::read_csv(empty), IoError);
  EXPECT_THROW(io::read_csv_file("/nonexistent/file.csv"), IoError);
}

TEST(Csv, RoundTripIsLossless) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::vector<Point> xs, ys;
  for (int i = 0; i < 200; ++i) {
    xs.push_back(Point{u(rng), u(rng) * 1e-7, u(rng)});
    ys.push_back(Point{u(rng), std::nextafter(1.0, 2.0), u(rng)});
  }
  const TwoSample ts(xs, ys);
  std::stringstream buf;
  io::write_two_sample_csv(buf, ts);
  const TwoSample back = io::read_labelled(io::read_csv(buf), "label");
  EXPECT_EQ(back.points(), ts.points());
  EXPECT_EQ(back.n1(), ts.n1());
}

TEST(Csv, WitnessColumns) {
  const std::vector<Point> pts{{0.5, 0.5}, {0.25, 1.0}};
  const std::vector<Label> labels{Label::X, Label::Y};
  const std::vector<char> in{1, 0};
  std::ostringstream os;
  io::write_points_csv(os, pts, labels, in);
  EXPECT_EQ(os.str(), "x1,x2,label,in_witness\n0.5,0.5,x,1\n0.25,1,y,0\n");
}

TEST(Json, ReportFields) {
  TestReport rep;
  rep.statistic = 0.25;
  rep.statistic_exact = Rational(1, 4);
  rep.p_value = 0.05;
  rep.critical_value = 0.2;
  rep.alpha = 0.05;
  rep.n_permutations = 199;
  rep.reject = true;
  rep.witness = std::vector<std::size_t>{0, 2};
  rep.seed = 7;
  rep.graph_meta = {"knn", 10.0, 123};
  const auto j = io::report_to_json(rep, 1.5);
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["method"], "graph_tv");
  EXPECT_EQ(j["statistic_exact"], "1/4");
  EXPECT_EQ(j["witness"].size(), 2u);
  EXPECT_EQ(j["graph_meta"]["edges"], 123);
  EXPECT_EQ(j["runtime_ms"], 1.5);
  const std::vector<std::string> keys{"schema", "method", "statistic", "statistic_exact",
                                      "p_value", "critical_value", "alpha",
                                      "n_permutations", "reject", "witness", "seed",
                                      "graph_meta", "runtime_ms"};
  std::vector<std::string> got;
  for (auto it = j.begin(); it != j.end(); ++it) got.push_back(it.key());
  EXPECT_EQ(got, keys);
  TestReport plain;
  const auto k = io::report_to_json(plain, std::nullopt);
  EXPECT_TRUE(k["statistic_exact"].is_null());
  EXPECT_TRUE(k["witness"].is_null());
  EXPECT_TRUE(k["runtime_ms"].is_null());
}

TEST(StudyTable, CsvAndJson) {
  StudyResult res;
  res.rows.push_back({"chi_squared(0.5)", 0.02, 1.5, 0.75, 0.05, 10, 3});
  std::ostringstream os;
  io::write_study_csv(os, res);
  EXPECT_EQ(os.str(), "method,eta,s,auc,auc_se,trials,seed\nchi_squared(0.5),0.02,1.5,0.75,0.050000000000000003,10,3\n");
  const auto j = io::study_to_json(res);
  EXPECT_EQ(j["rows"][0]["auc"], 0.75);
}
