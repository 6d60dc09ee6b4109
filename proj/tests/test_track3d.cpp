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

#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "asttrack/errors.hpp"
#include "asttrack/scenegen.hpp"
#include "asttrack/track3d.hpp"
#include "asttrack/util.hpp"
#include "test_support.hpp"

namespace asttrack {
namespace {

namespace fs = std::filesystem;

CameraIntrinsics cam() { return CameraConfig{}.intrinsics(); }

TEST(Frustum, DepthBounds) {
  const Box2D whole = Box2D::from_extent(0, 0, 320, 240);
  const PointCloud pts = {Point3(0, 0, 0.5), Point3(0, 0, 50), Point3(0, 0, 10), Point3(0, 0, 1), Point3(0, 0, 45)};
  const auto f = frustum_extract(pts, whole, cam());
  ASSERT_EQ(f.points.size(), 3u);
  EXPECT_EQ(f.points[0], Point3(0, 0, 10));
  EXPECT_EQ(f.points[1], Point3(0, 0, 1));
  EXPECT_EQ(f.points[2], Point3(0, 0, 45));
}

TEST(Frustum, WholeImageAndDisjointBoxes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.2, 60.0);
  PointCloud pts;
  for (int i = 0; i < 500; ++i) {
    const double d = z(rng);
    pts.push_back(Point3(u(rng) * 0.5 * d, u(rng) * 0.4 * d, d));
  }
  const auto all = frustum_extract(pts, Box2D::from_extent(-1e6, -1e6, 1e6, 1e6), cam());
  std::size_t cropped = 0;
  for (const auto& p : pts) cropped += p.z() >= 1.0 && p.z() <= 45.0;
  EXPECT_EQ(all.points.size(), cropped);
  const auto none = frustum_extract(pts, Box2D::from_extent(1e5, 1e5, 1e5 + 10, 1e5 + 10), cam());
  EXPECT_TRUE(none.empty());
}

TEST(Frustum, SoundAndComplete) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.5, 50.0);
  PointCloud pts;
  for (int i = 0; i < 2000; ++i) {
    const double d = z(rng);
    pts.push_back(Point3(u(rng) * 0.6 * d, u(rng) * 0.45 * d, d));
  }
  const Box2D box = Box2D::from_extent(80, 60, 200, 170);
  const auto f = frustum_extract(pts, box, cam(), 1.0, 45.0, 4);
  EXPECT_EQ(f.frame_index, 4);
  EXPECT_EQ(f.source, box);
  for (const auto& p : f.points) {
    const Pixel px = cam().project_unchecked(p);
    EXPECT_GE(px.u, box.left());
    EXPECT_LE(px.u, box.right());
    EXPECT_GE(px.v, box.top());
    EXPECT_LE(px.v, box.bottom());
  }
  std::size_t expected = 0;
  for (const auto& p : pts) {
    const Pixel px = cam().project_unchecked(p);
    expected += p.z() >= 1.0 && p.z() <= 45.0 && px.u >= 80 && px.u <= 200 && px.v >= 60 && px.v <= 170;
  }
  EXPECT_EQ(f.points.size(), expected);
}

TEST(Frustum, EdgesAreInclusive) {
  const Point3 p = backproject(200.0, 60.0, 10.0, cam());
  const PointCloud pts = {p};
  const Pixel px = cam().project_unchecked(p);
  EXPECT_EQ(frustum_extract(pts, Box2D::from_extent(80, px.v, px.u, 170), cam()).points.size(), 1u);
}

TEST(Frustum, Errors) {
  const PointCloud pts = {Point3(0, 0, 10)};
  test::expect_error(ErrorKind::kInvalidParameter, [&] { frustum_extract(pts, Box2D{160, 120, 0, 10}, cam()); });
  test::expect_error(ErrorKind::kInvalidParameter,
                     [&] { frustum_extract(pts, Box2D{160, 120, 10, 10}, cam(), 5.0, 2.0); });
}

TEST(ProjectBox, Examples) {
  const CameraIntrinsics c = cam();
  Box3D b;
  b.center = Point3(0, 0, 10);
  b.size = Eigen::Vector3d(2, 1, 3);
  const Box2D p = project_box3d_center_section(b, c);
  EXPECT_NEAR(p.cx, c.cx(), 1e-12);
  EXPECT_NEAR(p.cy, c.cy(), 1e-12);
  EXPECT_NEAR(p.w, c.fx() * 2.0 / 10.0, 1e-12);
  EXPECT_NEAR(p.h, c.fy() * 1.0 / 10.0, 1e-12);
  b.center.z() = 20;
  const Box2D q = project_box3d_center_section(b, c);
  EXPECT_NEAR(q.w, 0.5 * p.w, 1e-12);
  EXPECT_NEAR(q.h, 0.5 * p.h, 1e-12);
  b.center = Point3(1, -2, 8);
  b.size.setZero();
  const Box2D z = project_box3d_center_section(b, c);
  EXPECT_EQ(z.w, 0.0);
  EXPECT_EQ(z.h, 0.0);
  EXPECT_NEAR(z.cx, c.project_unchecked(b.center).u, 1e-12);
  b.center.z() = 0.0;
  EXPECT_THROW(project_box3d_center_section(b, c), ProjectionDomainError);
}

TEST(Fuse, Examples) {
  const CameraIntrinsics c = cam();
  const Box2D a{100, 100, 40, 40};
  // A 3D box whose center section projects to `target`.
  Box3D b;
  const double z = 10.0;
  b.center = backproject(120, 100, z, c);
  b.size = Eigen::Vector3d(60 * z / c.fx(), 40 * z / c.fy(), 1.0);
  const Box2D fused = fuse(a, b, c);
  EXPECT_NEAR(fused.cx, 106, 1e-9);
  EXPECT_NEAR(fused.cy, 100, 1e-9);
  EXPECT_NEAR(fused.w, 46, 1e-9);
  EXPECT_NEAR(fused.h, 40, 1e-9);
  EXPECT_EQ(fuse(a, b, c, FusionConfig{0.0, 1.0}), a);

  Box3D same;
  same.center = backproject(100, 100, z, c);
  same.size = Eigen::Vector3d(40 * z / c.fx(), 40 * z / c.fy(), 2.0);
  for (double l1 : {0.1, 0.5, 0.9}) {
    const Box2D f = fuse(a, same, c, FusionConfig{l1, 1.0 - l1});
    EXPECT_NEAR(f.cx, a.cx, 1e-9);
    EXPECT_NEAR(f.w, a.w, 1e-9);
  }
  test::expect_error(ErrorKind::kInvalidParameter, [] { FusionConfig{0.5, 0.6}.validate(); });
  test::expect_error(ErrorKind::kInvalidParameter, [] { FusionConfig{-0.1, 1.1}.validate(); });
}

TEST(Estimators, BaselineIsMinEnclosingBox) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  PointCloud pts;
  for (int i = 0; i < 100; ++i) pts.push_back(Point3(g(rng), g(rng), 10 + g(rng)));
  EXPECT_EQ(EnclosingBoxEstimator().estimate(pts, ShapeClass::kA, 1), min_enclosing_box(pts));
  test::expect_error(ErrorKind::kConfiguration, [] { A3BoxEstimator(nullptr); });
}

// A sequence whose clouds hold every mesh vertex instead of the visible
// surface, so the enclosing box of a ground-truth frustum is the full box.
Sequence complete_cloud_sequence() {
  const AsteroidModel model = generate_asteroid({ShapeClass::kB, 1, 6.0, std::nullopt}, 5);
  const CameraIntrinsics c = cam();
  Sequence seq;
  seq.meta.id = "complete";
  seq.meta.category = FineCategory{ShapeClass::kB, 1};
  seq.meta.frames = 6;
  for (int t = 0; t < 6; ++t) {
    Pose pose;
    pose.translation = Eigen::Vector3d(-1.0 + 0.4 * t, 0.5 - 0.2 * t, 18.0 + t);
    pose.rotation = random_rotation(static_cast<std::uint64_t>(t + 1));
    Frame f = render_frame(model, pose, c, 0.3);
    seq.frames.push_back(SequenceFrame{std::move(f.image), transform_vertices(model, pose), f.anno2d, f.anno3d});
  }
  return seq;
}

TEST(TrackSequence, OracleWithCompleteCloudsAndBaseline) {
  const Sequence seq = complete_cloud_sequence();
  std::vector<Box2D> gt;
  for (const auto& f : seq.frames) gt.push_back(f.anno2d);
  OracleTracker oracle(gt, 0.0, 1);
  const TrackResult r = track_sequence(seq, oracle, EnclosingBoxEstimator(), TrackConfig{});
  ASSERT_EQ(r.frames.size(), 6u);
  for (std::size_t t = 1; t < 6; ++t) {
    EXPECT_GE(iou3d(r.frames[t].box3d, seq.frames[t].anno3d), 0.9) << t;
    EXPECT_EQ(r.frames[t].raw, gt[t]);
    EXPECT_FALSE(r.frames[t].hold);
  }
  EXPECT_EQ(r.restarts, 0);
}

TEST(TrackSequence, FrameZeroIsGroundTruth) {
  const Sequence seq = test::synthetic_sequence(4, "test", 1);
  TemplateTracker tracker;
  const TrackResult r = track_sequence(seq, tracker, EnclosingBoxEstimator(), TrackConfig{});
  EXPECT_EQ(r.frames[0].raw, seq.frames[0].anno2d);
  EXPECT_EQ(r.frames[0].fused, seq.frames[0].anno2d);
  EXPECT_EQ(r.frames[0].box3d, seq.frames[0].anno3d);
  EXPECT_EQ(r.sequence_id, seq.meta.id);
}

TEST(TrackSequence, EmptyFrustumHoldsThePreviousBox) {
  Sequence seq = test::synthetic_sequence(4, "test", 1);
  seq.frames[2].cloud.clear();
  std::vector<Box2D> gt;
  for (const auto& f : seq.frames) gt.push_back(f.anno2d);
  OracleTracker oracle(gt, 0.0, 1);
  TrackConfig cfg;
  cfg.restart = false;
  const TrackResult r = track_sequence(seq, oracle, EnclosingBoxEstimator(), cfg);
  EXPECT_TRUE(r.frames[2].hold);
  EXPECT_EQ(r.frames[2].box3d, r.frames[1].box3d);
  EXPECT_FALSE(r.frames[3].hold);
}

TEST(TrackSequence, RestartAfterZeroOverlap) {
  Sequence seq = test::synthetic_sequence(5, "test", 1);
  // Pulling the cloud towards the camera along its rays keeps the frustum
  // but gives zero 3D overlap at frame 2.
  for (auto& p : seq.frames[2].cloud) p *= 0.25;
  std::vector<Box2D> gt;
  for (const auto& f : seq.frames) gt.push_back(f.anno2d);
  OracleTracker oracle(gt, 0.0, 1);
  const TrackResult r = track_sequence(seq, oracle, EnclosingBoxEstimator(), TrackConfig{});
  EXPECT_EQ(iou3d(r.frames[2].box3d, seq.frames[2].anno3d), 0.0);
  EXPECT_TRUE(r.frames[3].restarted);
  EXPECT_EQ(r.frames[3].raw, gt[3]);
  EXPECT_EQ(r.restarts, 1);
  TrackConfig off;
  off.restart = false;
  OracleTracker again(gt, 0.0, 1);
  EXPECT_EQ(track_sequence(seq, again, EnclosingBoxEstimator(), off).restarts, 0);
}

TEST(TrackSequence, DeterministicFilesAndRoundTrip) {
  const Sequence seq = test::synthetic_sequence(6, "test", 3);
  const auto root = fs::temp_directory_path() / "asttrack_track3d_test";
  fs::remove_all(root);
  A3BoxConfig mc;
  mc.n_points = 64;
  mc.center_point_widths = {8, 8, 16};
  mc.center_head_widths = {16, 8};
  mc.box_point_widths = {8, 8, 16};
  mc.box_head_widths = {16, 16};
  const auto model = std::make_shared<A3BoxModel>(mc, nnet::glorot_init(make_a3box_layout(mc), 4));
  const A3BoxEstimator est(model);
  TrackConfig cfg;
  cfg.seed = 11;
  for (const char* run : {"a", "b"}) {
    TemplateTracker tracker;
    write_track_result(root / run, track_sequence(seq, tracker, est, cfg));
  }
  for (const char* f : {"pred2d.csv", "pred3d.csv"}) {
    EXPECT_EQ(read_text_file(root / "a" / f), read_text_file(root / "b" / f)) << f;
  }
  TemplateTracker tracker;
  const TrackResult r = track_sequence(seq, tracker, est, cfg);
  const TrajectoryFiles files = read_track_result(root / "a");
  ASSERT_EQ(files.box3d.size(), r.frames.size());
  for (std::size_t t = 0; t < r.frames.size(); ++t) {
    EXPECT_EQ(files.box3d[t], r.frames[t].box3d);
    EXPECT_EQ(files.fused[t], r.frames[t].fused);
    EXPECT_EQ(files.raw[t], r.frames[t].raw);
  }
  EXPECT_GE(files.tracking_ms, 0.0);
  fs::remove_all(root);
}

}  // namespace
}  // namespace asttrack
