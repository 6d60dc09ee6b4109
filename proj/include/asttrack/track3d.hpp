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

#pragma once

// Frame-by-frame 3D tracking: 2D tracker box -> frustum proposal -> 3D box
// estimate -> fusion of the projected 3D box back into the 2D box.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "asttrack/a3boxnet.hpp"
#include "asttrack/dataset.hpp"
#include "asttrack/geometry.hpp"
#include "asttrack/tracker2d.hpp"

namespace asttrack {

struct FrustumProposal {
  PointCloud points;
  Box2D source;
  int frame_index = 0;

  bool empty() const { return points.empty(); }
};

// Keeps points with z_min <= z <= z_max projecting inside the box (edges
// inclusive). An empty result is a normal outcome, not an error.
FrustumProposal frustum_extract(std::span<const Point3> raw, const Box2D& box, const CameraIntrinsics& cam,
                                double z_min = 1.0, double z_max = 45.0, int frame_index = 0);

// Pixel extent of the box's cross-section at its center depth.
Box2D project_box3d_center_section(const Box3D& box, const CameraIntrinsics& cam);

struct FusionConfig {
  double lambda1 = 0.3;  // weight of the projected 3D box
  double lambda2 = 0.7;  // weight of the 2D tracker box

  void validate() const;
};

// lambda1 * proj(box3d) + lambda2 * box2d, coordinate-wise in (cx, cy, w, h).
Box2D fuse(const Box2D& box2d, const Box3D& box3d, const CameraIntrinsics& cam, const FusionConfig& cfg = {});

class BoxEstimator {
 public:
  virtual ~BoxEstimator() = default;
  // `points` is nonempty. Implementations must be safe to call concurrently.
  virtual Box3D estimate(std::span<const Point3> points, ShapeClass shape, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

class EnclosingBoxEstimator final : public BoxEstimator {
 public:
  Box3D estimate(std::span<const Point3> points, ShapeClass shape, std::uint64_t seed) const override;
  std::string name() const override { return "baseline"; }
};

class A3BoxEstimator final : public BoxEstimator {
 public:
  explicit A3BoxEstimator(std::shared_ptr<const A3BoxModel> model, std::string name = "track3d");
  Box3D estimate(std::span<const Point3> points, ShapeClass shape, std::uint64_t seed) const override;
  std::string name() const override { return name_; }

 private:
  std::shared_ptr<const A3BoxModel> model_;
  std::string name_;
};

struct TrackConfig {
  FusionConfig fusion;
  double z_min = 1.0;
  double z_max = 45.0;
  // Reinitialize the 2D tracker from ground truth on the frame after a
  // zero 3D overlap.
  bool restart = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FrameResult {
  Box2D raw;
  Box2D fused;
  Box3D box3d;
  bool hold = false;       // empty frustum, previous 3D box repeated
  bool restarted = false;  // 2D tracker reinitialized from ground truth
  double ms_track2d = 0.0;
  double ms_frustum = 0.0;
  double ms_estimate = 0.0;
  double ms_fuse = 0.0;
};

struct TrackResult {
  std::string sequence_id;
  std::vector<FrameResult> frames;
  int restarts = 0;

  // Sum of the per-stage times over frames 1..n-1.
  double tracking_ms() const;
};

// Frame 0 reports the ground truth the trackers are initialized with.
TrackResult track_sequence(const Sequence& seq, Tracker2D& tracker, const BoxEstimator& estimator,
                           const TrackConfig& cfg);

// pred2d.csv, pred3d.csv and timing.csv under dir.
void write_track_result(const std::filesystem::path& dir, const TrackResult& result);

struct TrajectoryFiles {
  std::vector<Box2D> raw;
  std::vector<Box2D> fused;
  std::vector<Box3D> box3d;
  std::vector<int> hold;
  double tracking_ms = 0.0;
};
TrajectoryFiles read_track_result(const std::filesystem::path& dir);

}  // namespace asttrack
