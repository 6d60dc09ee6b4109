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
#include <random>

#include <gtest/gtest.h>

#include "asttrack/errors.hpp"
#include "asttrack/tracker2d.hpp"
#include "test_support.hpp"

namespace asttrack {
namespace {

// A 48x40 random-textured patch pasted at (x0, y0) over a dim constant
// background.
Image8 textured_scene(int x0, int y0, std::uint64_t seed = 1) {
  Image8 img(320, 240, 12);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(40, 250);
  std::vector<int> patch(48 * 40);
  for (int& v : patch) v = u(rng);
  // Smooth once so the correlation peak is a few pixels wide.
  std::vector<int> smooth(patch.size());
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 48; ++x) {
      int acc = 0, n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= 48 || yy >= 40) continue;
          acc += patch[static_cast<std::size_t>(yy * 48 + xx)];
          ++n;
        }
      }
      smooth[static_cast<std::size_t>(y * 48 + x)] = acc / n;
    }
  }
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 48; ++x) img.at(x0 + x, y0 + y) = static_cast<std::uint8_t>(smooth[static_cast<std::size_t>(y * 48 + x)]);
  }
  return img;
}

Box2D patch_box(int x0, int y0) { return Box2D::from_extent(x0, y0, x0 + 48, y0 + 40); }

TEST(TemplateTracker, ConfigValidation) {
  TemplateTrackerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.template_size = 2;
  test::expect_error(ErrorKind::kInvalidParameter, [&] { c.validate(); });
  c = {};
  c.scales.clear();
  test::expect_error(ErrorKind::kInvalidParameter, [&] { c.validate(); });
  c = {};
  c.learning_rate = 1.5;
  test::expect_error(ErrorKind::kInvalidParameter, [&] { c.validate(); });
}

TEST(TemplateTracker, SameFrameUpdateStaysPut) {
  const Image8 img = textured_scene(100, 80);
  TemplateTracker t;
  const Box2D box = patch_box(100, 80);
  t.init(img, box, 0);
  EXPECT_EQ(t.state().box, box);
  EXPECT_EQ(t.state().templ.size(), 32u * 32u);
  const Box2D out = t.update(img, 1);
  EXPECT_LT(std::hypot(out.cx - box.cx, out.cy - box.cy), 1.0);
  EXPECT_FALSE(t.low_confidence());
}

TEST(TemplateTracker, InitRejectsBadBoxes) {
  const Image8 img = textured_scene(100, 80);
  TemplateTracker t;
  test::expect_error(ErrorKind::kInvalidParameter, [&] { t.init(img, Box2D{500, 500, 20, 20}, 0); });
  test::expect_error(ErrorKind::kInvalidParameter, [&] { t.init(img, Box2D{100, 100, 0, 20}, 0); });
  test::expect_error(ErrorKind::kConfiguration, [&] { t.update(img, 1); });
}

TEST(TemplateTracker, InitIsDeterministic) {
  const Image8 img = textured_scene(100, 80);
  TemplateTracker a, b;
  a.init(img, patch_box(100, 80), 0);
  b.init(img, patch_box(100, 80), 0);
  EXPECT_EQ(a.state(), b.state());
  a.update(textured_scene(102, 81), 1);
  b.update(textured_scene(102, 81), 1);
  EXPECT_EQ(a.state(), b.state());
}

TEST(TemplateTracker, RecoversThreePixelShift) {
  for (auto [dx, dy] : {std::pair{3, 0}, std::pair{0, 3}, std::pair{-3, 0}, std::pair{3, -3}}) {
    TemplateTracker t;
    t.init(textured_scene(120, 90), patch_box(120, 90), 0);
    const Box2D out = t.update(textured_scene(120 + dx, 90 + dy), 1);
    const Box2D truth = patch_box(120 + dx, 90 + dy);
    EXPECT_NEAR(out.cx - 144.0, dx, 1.0);
    EXPECT_NEAR(out.cy - 110.0, dy, 1.0);
    EXPECT_GT(iou2d(out, truth), 0.8);
  }
}

TEST(TemplateTracker, StaticSceneDoesNotDrift) {
  const Sequence seq = test::synthetic_sequence(1, "test", 2);
  const Image8& img = seq.frames[0].image;
  const Box2D box = seq.frames[0].anno2d;
  TemplateTracker t;
  t.init(img, box, 0);
  Box2D cur = box;
  for (int f = 1; f <= 50; ++f) cur = t.update(img, f);
  EXPECT_LT(std::hypot(cur.cx - box.cx, cur.cy - box.cy), 2.0);
  EXPECT_LT(std::abs(cur.w - box.w), 2.0);
}

TEST(TemplateTracker, UniformFrameKeepsBoxAndFlags) {
  TemplateTracker t;
  const Box2D box = patch_box(100, 80);
  t.init(textured_scene(100, 80), box, 0);
  const Box2D out = t.update(Image8(320, 240, 90), 1);
  EXPECT_EQ(out, box);
  EXPECT_TRUE(t.low_confidence());
  // The tracker recovers once texture returns.
  t.update(textured_scene(100, 80), 2);
  EXPECT_FALSE(t.low_confidence());
}

TEST(TemplateTracker, BoxStaysInsideImage) {
  TemplateTracker t;
  t.init(textured_scene(0, 0), patch_box(0, 0), 0);
  for (int f = 1; f < 5; ++f) {
    const Box2D b = t.update(textured_scene(0, 0), f);
    EXPECT_GE(b.left(), -1e-9);
    EXPECT_GE(b.top(), -1e-9);
  }
}

std::vector<Box2D> gt_track(int n) {
  std::vector<Box2D> gt;
  for (int i = 0; i < n; ++i) gt.push_back(Box2D{100.0 + i, 120.0 - 0.5 * i, 60.0, 45.0});
  return gt;
}

TEST(OracleTracker, ZeroSigmaIsExact) {
  const auto gt = gt_track(30);
  OracleTracker t(gt, 0.0, 3);
  const Image8 img(320, 240);
  t.init(img, gt[0], 0);
  for (int f = 1; f < 30; ++f) EXPECT_EQ(t.update(img, f), gt[static_cast<std::size_t>(f)]);
}

TEST(OracleTracker, DeterministicPerFrame) {
  const auto gt = gt_track(20);
  OracleTracker a(gt, 0.1, 5), b(gt, 0.1, 5), c(gt, 0.1, 6);
  EXPECT_EQ(a.box_at(7, 320, 240), b.box_at(7, 320, 240));
  EXPECT_NE(a.box_at(7, 320, 240), c.box_at(7, 320, 240));
  // Independent of call history.
  const Box2D direct = a.box_at(12, 320, 240);
  for (int f = 0; f < 12; ++f) b.box_at(f, 320, 240);
  EXPECT_EQ(b.box_at(12, 320, 240), direct);
}

TEST(OracleTracker, SigmaSweepOrdersOverlap) {
  const auto gt = gt_track(100);
  std::vector<double> ao;
  for (double sigma : {0.0, 0.05, 0.1, 0.2}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      OracleTracker t(gt, sigma, seed);
      for (int f = 0; f < 100; ++f) sum += iou2d(t.box_at(f, 320, 240), gt[static_cast<std::size_t>(f)]);
    }
    ao.push_back(sum / 500.0);
  }
  EXPECT_DOUBLE_EQ(ao[0], 1.0);
  for (std::size_t i = 1; i < ao.size(); ++i) EXPECT_LT(ao[i], ao[i - 1]);
}

TEST(OracleTracker, ClipsToImage) {
  const std::vector<Box2D> gt = {Box2D{5, 5, 30, 30}};
  OracleTracker t(gt, 0.3, 1);
  for (int i = 0; i < 20; ++i) {
    OracleTracker ti(gt, 0.3, static_cast<std::uint64_t>(i));
    const Box2D b = ti.box_at(0, 320, 240);
    EXPECT_GE(b.left(), -1e-9);
    EXPECT_GE(b.top(), -1e-9);
    EXPECT_LE(b.right(), 320 + 1e-9);
  }
  test::expect_error(ErrorKind::kInvalidParameter, [&] { t.box_at(3, 320, 240); });
}

TEST(ClipToImage, Examples) {
  EXPECT_EQ(clip_to_image(Box2D{10, 10, 40, 20}, 320, 240), Box2D::from_extent(0, 0, 30, 20));
  EXPECT_EQ(clip_to_image(Box2D{100, 100, 10, 10}, 320, 240), (Box2D{100, 100, 10, 10}));
  EXPECT_EQ(clip_to_image(Box2D{-100, 100, 10, 10}, 320, 240).area(), 0.0);
}

// Both implementations satisfy the same contract on a shared sequence.
TEST(Tracker2D, InterfaceSubstitutability) {
  const Sequence seq = test::synthetic_sequence(5, "test", 0);
  std::vector<Box2D> gt;
  for (const auto& f : seq.frames) gt.push_back(f.anno2d);
  std::vector<std::unique_ptr<Tracker2D>> trackers;
  trackers.push_back(std::make_unique<TemplateTracker>());
  trackers.push_back(std::make_unique<OracleTracker>(gt, 0.05, 1));
  for (auto& t : trackers) {
    t->init(seq.frames[0].image, gt[0], 0);
    for (int f = 1; f < 5; ++f) {
      const Box2D b = t->update(seq.frames[static_cast<std::size_t>(f)].image, f);
      EXPECT_GT(b.area(), 0.0) << t->name();
      EXPECT_GT(iou2d(b, gt[static_cast<std::size_t>(f)]), 0.3) << t->name();
    }
  }
}

}  // namespace
}  // namespace asttrack
