// Copyright 2026 The asttrack Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "asttrack/errors.hpp"
#include "asttrack/eval.hpp"
#include "asttrack/util.hpp"
#include "test_support.hpp"

namespace asttrack {
namespace {

namespace fs = std::filesystem;

// Rows of a small CSV file as strings.
std::vector<std::vector<std::string>> csv_cells(const fs::path& path) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    out.push_back(row);
  }
  return out;
}

OverlapSeries series(std::vector<double> v) {
  OverlapSeries s;
  s.overlaps = std::move(v);
  return s;
}

Box3D cube(double x, double y, double z) {
  Box3D b;
  b.center = Point3(x, y, z);
  b.size = Eigen::Vector3d::Ones();
  return b;
}

TEST(OverlapSeries, Examples) {
  std::vector<Box3D> gt, pred;
  for (int t = 0; t < 10; ++t) {
    gt.push_back(cube(0, 0, 10 + t));
    pred.push_back(cube(t == 6 ? 5.0 : 0.5, 0, 10 + t));
  }
  const auto s = overlap_series(gt, gt, OverlapMode::k3d, true);
  EXPECT_TRUE(std::all_of(s.overlaps.begin(), s.overlaps.end(), [](double v) { return v == 1.0; }));
  EXPECT_TRUE(s.restarts.empty());
  const auto r = overlap_series(pred, gt, OverlapMode::k3d, true);
  EXPECT_EQ(r.restarts, std::vector<int>{6});
  EXPECT_EQ(r.overlaps[6], 0.0);
  for (int t = 0; t < 10; ++t) {
    if (t != 6) {
      EXPECT_NEAR(r.overlaps[static_cast<std::size_t>(t)], 1.0 / 3.0, 1e-12);
    }
  }
  const auto off = overlap_series(pred, gt, OverlapMode::k3d, false);
  EXPECT_TRUE(off.restarts.empty());
  EXPECT_EQ(off.overlaps, r.overlaps);
  const auto bev = overlap_series(pred, gt, OverlapMode::kBev, true);
  EXPECT_NEAR(bev.overlaps[0], 1.0 / 3.0, 1e-12);
  test::expect_error(ErrorKind::kDimensionMismatch,
                     [&] { overlap_series(std::span(pred).first(3), gt, OverlapMode::k3d, true); });
}

TEST(AverageOverlap, Examples) {
  const std::vector<OverlapSeries> half = {series(std::vector<double>(7, 0.5)), series({0.5})};
  EXPECT_DOUBLE_EQ(ao(half), 0.5);
  const std::vector<OverlapSeries> mixed = {series(std::vector<double>(10, 0.2)), series(std::vector<double>(1000, 0.8))};
  EXPECT_NEAR(ao(mixed), 0.5, 1e-12);
  const std::vector<OverlapSeries> perfect = {series(std::vector<double>(5, 1.0))};
  EXPECT_EQ(ao(perfect), 1.0);
  test::expect_error(ErrorKind::kEmptyInput, [] { ao(std::vector<OverlapSeries>{}); });
}

TEST(CenterError, Examples) {
  std::vector<Box3D> gt, dx, d345;
  for (int t = 0; t < 5; ++t) {
    gt.push_back(cube(t, 0, 10));
    dx.push_back(cube(t + 1.0, 0, 10));
    d345.push_back(cube(t + 3.0, 4.0, 10));
  }
  EXPECT_EQ(center_error(gt, gt), 0.0);
  EXPECT_NEAR(center_error(dx, gt), 1.0, 1e-12);
  EXPECT_NEAR(center_error(d345, gt), 5.0, 1e-12);
  const std::vector<Box2D> g2 = {Box2D{10, 10, 4, 4}}, p2 = {Box2D{13, 14, 4, 4}};
  EXPECT_NEAR(center_error(p2, g2), 5.0, 1e-12);
  const std::vector<double> per = {1.0, 2.0, 6.0};
  EXPECT_NEAR(ace(per), 3.0, 1e-12);
}

TEST(SuccessRate, Examples) {
  const std::vector<OverlapSeries> one = {series({0.6, 0.4, 0.7})};
  EXPECT_NEAR(success_rate(one, 0.5), 2.0 / 3.0, 1e-12);
  const std::vector<OverlapSeries> ones = {series(std::vector<double>(4, 1.0))};
  const Curve c = success_curve(ones);
  ASSERT_EQ(c.size(), 101u);
  for (const auto& [tau, sr] : c) EXPECT_EQ(sr, tau < 1.0 ? 1.0 : 0.0);
  const std::vector<OverlapSeries> zeros = {series({0.0, 0.5})};
  EXPECT_EQ(success_rate(zeros, 0.0), 0.5);  // strict inequality
}

std::vector<OverlapSeries> random_sequences(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(5, 300);
  std::vector<OverlapSeries> seqs;
  for (int s = 0; s < 12; ++s) {
    OverlapSeries o;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) o.overlaps.push_back(u(rng) < 0.1 ? 0.0 : u(rng));
    seqs.push_back(o);
  }
  return seqs;
}

TEST(SuccessCurve, AreaMatchesAverageOverlap) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto seqs = random_sequences(seed);
    const Curve c = success_curve(seqs);
    EXPECT_NEAR(trapezoid_area(c), ao(seqs), 0.01);
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LE(c[i].second, c[i - 1].second);
  }
}

TEST(Aggregates, InvariantToSequenceOrder) {
  auto seqs = random_sequences(5);
  const double a = ao(seqs);
  std::vector<double> per(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) per[i] = seqs[i].mean();
  const double e = ace(per);
  std::mt19937_64 rng(6);
  std::shuffle(seqs.begin(), seqs.end(), rng);
  std::shuffle(per.begin(), per.end(), rng);
  EXPECT_NEAR(ao(seqs), a, 1e-12);
  EXPECT_NEAR(ace(per), e, 1e-12);
}

TEST(CurveCsv, Format) {
  const Curve c = {{0.0, 1.0}, {0.5, 0.25}, {1.0, 0.0}};
  EXPECT_EQ(curve_csv(c), "threshold,success_rate\n0,1\n0.5,0.25\n1,0\n");
}

// Two sequences with hand-computed overlaps: sequence 0000 has four frames,
// the last three shifted half an edge (IoU 1/3 in 3D, BEV and 2D raw);
// sequence 0001 has two perfect frames.
class ReportFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / "asttrack_report_test";
    fs::remove_all(root_);
    const std::vector<int> lengths = {4, 2};
    for (int s = 0; s < 2; ++s) {
      const std::string id = fmt::format("{:04d}", s);
      std::vector<Box2D> gt2;
      std::vector<Box3D> gt3;
      TrackResult r;
      r.sequence_id = id;
      for (int t = 0; t < lengths[static_cast<std::size_t>(s)]; ++t) {
        gt2.push_back(Box2D{100, 100, 40, 40});
        gt3.push_back(cube(0, 0, 10 + t));
        FrameResult f;
        const bool shifted = s == 0 && t > 0;
        f.raw = Box2D{shifted ? 120.0 : 100.0, 100, 40, 40};
        f.fused = gt2.back();
        f.box3d = cube(shifted ? 0.5 : 0.0, 0, 10 + t);
        f.ms_track2d = f.ms_frustum = f.ms_estimate = f.ms_fuse = 1.0;
        r.frames.push_back(f);
      }
      write_text_file(root_ / "data" / "test" / id / "anno2d.csv", box2d_csv(gt2));
      write_text_file(root_ / "data" / "test" / id / "anno3d.csv", box3d_csv(gt3));
      write_text_file(root_ / "data" / "test" / id / "meta.json", "{}\n");
      write_track_result(root_ / "run" / "fixture" / id, r);
    }
    nlohmann::json cfg = {{"data", (root_ / "data").string()},
                          {"split", "test"},
                          {"estimators", {"fixture"}},
                          {"restart", true}};
    write_text_file(root_ / "run" / "config.json", cfg.dump());
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path root_;
};

TEST_F(ReportFixture, MetricsMatchHandComputedValues) {
  const auto scores = write_report(root_ / "run");
  ASSERT_EQ(scores.size(), 1u);
  const EstimatorScore& s = scores[0];
  EXPECT_NEAR(s.ao3d, 0.75, 1e-9);
  EXPECT_NEAR(s.aobev, 0.75, 1e-9);
  EXPECT_NEAR(s.ao2d, 1.0, 1e-9);
  EXPECT_NEAR(s.ao2d_raw, 0.75, 1e-9);
  EXPECT_NEAR(s.ace3d, 0.1875, 1e-9);
  EXPECT_NEAR(s.ace2d_raw, 7.5, 1e-9);
  EXPECT_NEAR(s.ace2d, 0.0, 1e-9);
  EXPECT_NEAR(s.fps, 250.0, 1e-9);
  EXPECT_NEAR(s.sequences[0].sr3d, 0.25, 1e-9);
  EXPECT_EQ(s.sequences[0].restarts, 0);

  const auto metrics = csv_cells(root_ / "run" / "metrics.csv");
  EXPECT_EQ(metrics[0], (std::vector<std::string>{"name", "AO2d", "ACE2d", "AObev", "AO3d", "ACE3d", "FPS"}));
  ASSERT_EQ(metrics.size(), 2u);
  EXPECT_EQ(metrics[1][0], "fixture");
  EXPECT_NEAR(std::stod(metrics[1][4]), 0.75, 1e-9);
  const auto t2 = csv_cells(root_ / "run" / "tracker2d.csv");
  EXPECT_NEAR(std::stod(t2[1][5]), 0.25, 1e-9);  // median of {0.5, 0}
  for (const char* f : {"success_2d.csv", "success_bev.csv", "success_3d.csv"}) {
    EXPECT_TRUE(fs::exists(root_ / "run" / "fixture" / f)) << f;
  }
}

TEST_F(ReportFixture, TwoEstimatorsGiveTwoRows) {
  fs::copy(root_ / "run" / "fixture", root_ / "run" / "other", fs::copy_options::recursive);
  nlohmann::json cfg = nlohmann::json::parse(read_text_file(root_ / "run" / "config.json"));
  cfg["estimators"] = {"fixture", "other"};
  write_text_file(root_ / "run" / "config.json", cfg.dump());
  write_report(root_ / "run");
  const auto metrics = csv_cells(root_ / "run" / "metrics.csv");
  ASSERT_EQ(metrics.size(), 3u);
  EXPECT_EQ(metrics[2][0], "other");
}

TEST_F(ReportFixture, RestartOffStillScores) {
  nlohmann::json cfg = nlohmann::json::parse(read_text_file(root_ / "run" / "config.json"));
  cfg["restart"] = false;
  write_text_file(root_ / "run" / "config.json", cfg.dump());
  EXPECT_NEAR(write_report(root_ / "run")[0].ao3d, 0.75, 1e-9);
}

TEST_F(ReportFixture, MissingDataErrors) {
  fs::create_directories(root_ / "empty");
  test::expect_error(ErrorKind::kMissingData, [&] { write_report(root_ / "empty"); });
  write_text_file(root_ / "empty" / "config.json", R"({"data": "x", "estimators": []})");
  test::expect_error(ErrorKind::kMissingData, [&] { write_report(root_ / "empty"); });
  fs::remove_all(root_ / "run" / "fixture" / "0001");
  test::expect_error(ErrorKind::kMissingData, [&] { write_report(root_ / "run"); });
}

TEST(Module, BaselineOnGroundTruthFrustums) {
  std::vector<Sequence> seqs = {test::synthetic_sequence(3, "test", 0), test::synthetic_sequence(3, "test", 1)};
  seqs[1].frames[2].cloud.clear();
  const ModuleScore a = evaluate_module(seqs, EnclosingBoxEstimator(), 0, 1.0, 45.0, 1, 1);
  const ModuleScore b = evaluate_module(seqs, EnclosingBoxEstimator(), 0, 1.0, 45.0, 1, 2);
  EXPECT_EQ(a.frames, 6);
  EXPECT_EQ(a.empty, 1);
  EXPECT_EQ(a.ao3d, b.ao3d);
  EXPECT_GT(a.ao3d, 0.0);
  EXPECT_LT(a.ao3d, 1.0);
  EXPECT_EQ(a.name, "baseline");

  ModuleScore p1 = a, p2 = a;
  p1.points = 2048;
  p2.points = 512;
  const std::string csv = points_sweep_csv({a, p1, p2});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "points,AO3d,AObev,ACE3d");
  EXPECT_LT(csv.find("\n512,"), csv.find("\n2048,"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

}  // namespace
}  // namespace asttrack
