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

#include "asttrack/track3d.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "asttrack/errors.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

FrustumProposal frustum_extract(std::span<const Point3> raw, const Box2D& box, const CameraIntrinsics& cam,
                                double z_min, double z_max, int frame_index) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) fail(ErrorKind::kInvalidParameter, "frustum box has zero area");
  if (!(z_min > 0.0) || !(z_max >= z_min)) fail(ErrorKind::kInvalidParameter, "frustum depth bounds are invalid");
  FrustumProposal out;
  out.source = box;
  out.frame_index = frame_index;
  const double l = box.left(), r = box.right(), t = box.top(), b = box.bottom();
  for (const Point3& p : raw) {
    if (p.z() < z_min || p.z() > z_max) continue;
    const Pixel px = cam.project_unchecked(p);
    if (px.u >= l && px.u <= r && px.v >= t && px.v <= b) out.points.push_back(p);
  }
  return out;
}

Box2D project_box3d_center_section(const Box3D& box, const CameraIntrinsics& cam) {
  const double z = box.center.z();
  if (!(z > 0.0)) throw ProjectionDomainError(0, fmt::format("box center depth {} is not positive", z));
  const double u0 = cam.fx() * (box.center.x() - 0.5 * box.size.x()) / z + cam.cx();
  const double u1 = cam.fx() * (box.center.x() + 0.5 * box.size.x()) / z + cam.cx();
  const double v0 = cam.fy() * (box.center.y() - 0.5 * box.size.y()) / z + cam.cy();
  const double v1 = cam.fy() * (box.center.y() + 0.5 * box.size.y()) / z + cam.cy();
  return Box2D::from_extent(u0, v0, u1, v1);
}

void FusionConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || std::abs(lambda1 + lambda2 - 1.0) > 1e-9) {
    fail(ErrorKind::kInvalidParameter,
         fmt::format("fusion weights must be nonnegative and sum to 1, got {} + {}", lambda1, lambda2));
  }
}

Box2D fuse(const Box2D& box2d, const Box3D& box3d, const CameraIntrinsics& cam, const FusionConfig& cfg) {
  cfg.validate();
  if (cfg.lambda1 == 0.0) return box2d;
  const Box2D p = project_box3d_center_section(box3d, cam);
  const double a = cfg.lambda1, b = cfg.lambda2;
  return {a * p.cx + b * box2d.cx, a * p.cy + b * box2d.cy, a * p.w + b * box2d.w, a * p.h + b * box2d.h};
}

Box3D EnclosingBoxEstimator::estimate(std::span<const Point3> points, ShapeClass, std::uint64_t) const {
  return min_enclosing_box(points);
}

A3BoxEstimator::A3BoxEstimator(std::shared_ptr<const A3BoxModel> model, std::string name)
    : model_(std::move(model)), name_(std::move(name)) {
  if (!model_) fail(ErrorKind::kConfiguration, "A3BoxEstimator needs a model");
}

Box3D A3BoxEstimator::estimate(std::span<const Point3> points, ShapeClass shape, std::uint64_t seed) const {
  return model_->predict(points, shape, seed).box;
}

void TrackConfig::validate() const {
  fusion.validate();
  if (!(z_min > 0.0) || !(z_max >= z_min)) fail(ErrorKind::kInvalidParameter, "depth bounds are invalid");
}

double TrackResult::tracking_ms() const {
  double total = 0.0;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const FrameResult& f = frames[t];
    total += f.ms_track2d + f.ms_frustum + f.ms_estimate + f.ms_fuse;
  }
  return total;
}

TrackResult track_sequence(const Sequence& seq, Tracker2D& tracker, const BoxEstimator& estimator,
                           const TrackConfig& cfg) {
  cfg.validate();
  if (seq.frames.empty()) fail(ErrorKind::kEmptyInput, fmt::format("sequence {} has no frames", seq.meta.id));
  const CameraIntrinsics cam = seq.camera();
  const ShapeClass shape = seq.meta.category.shape;

  TrackResult result;
  result.sequence_id = seq.meta.id;
  result.frames.resize(seq.frames.size());

  const SequenceFrame& first = seq.frames.front();
  tracker.init(first.image, first.anno2d, 0);
  result.frames[0].raw = first.anno2d;
  result.frames[0].fused = first.anno2d;
  result.frames[0].box3d = first.anno3d;

  Box3D previous = first.anno3d;
  bool need_restart = false;
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const SequenceFrame& frame = seq.frames[t];
    FrameResult& out = result.frames[t];
    const int ti = static_cast<int>(t);

    auto start = Clock::now();
    if (need_restart) {
      tracker.init(frame.image, frame.anno2d, ti);
      out.raw = frame.anno2d;
      out.restarted = true;
      ++result.restarts;
    } else {
      out.raw = tracker.update(frame.image, ti);
    }
    out.ms_track2d = ms_since(start);

    start = Clock::now();
    FrustumProposal proposal;
    if (out.raw.w > 0.0 && out.raw.h > 0.0) {
      proposal = frustum_extract(frame.cloud, out.raw, cam, cfg.z_min, cfg.z_max, ti);
    }
    out.ms_frustum = ms_since(start);

    start = Clock::now();
    if (proposal.empty()) {
      out.box3d = previous;
      out.hold = true;
    } else {
      out.box3d = estimator.estimate(proposal.points, shape,
                                     derive_seed(cfg.seed, "estimate/" + seq.meta.id, t));
    }
    out.ms_estimate = ms_since(start);

    start = Clock::now();
    out.fused = out.box3d.center.z() > 0.0 ? fuse(out.raw, out.box3d, cam, cfg.fusion) : out.raw;
    out.ms_fuse = ms_since(start);

    need_restart = cfg.restart && iou3d(out.box3d, frame.anno3d) == 0.0;
    previous = out.box3d;
  }
  return result;
}

void write_track_result(const std::filesystem::path& dir, const TrackResult& result) {
  std::string p2 = "frame,cx,cy,w,h,fused_cx,fused_cy,fused_w,fused_h\n";
  std::string p3 = "frame,cx,cy,cz,sx,sy,sz,hold_flag\n";
  std::string tm = "frame,track2d_ms,frustum_ms,estimate_ms,fuse_ms\n";
  auto d = [](double v) { return format_double(v); };
  for (std::size_t t = 0; t < result.frames.size(); ++t) {
    const FrameResult& f = result.frames[t];
    p2 += fmt::format("{},{},{},{},{},{},{},{},{}\n", t, d(f.raw.cx), d(f.raw.cy), d(f.raw.w), d(f.raw.h),
                      d(f.fused.cx), d(f.fused.cy), d(f.fused.w), d(f.fused.h));
    const Box3D& b = f.box3d;
    p3 += fmt::format("{},{},{},{},{},{},{},{}\n", t, d(b.center.x()), d(b.center.y()), d(b.center.z()),
                      d(b.size.x()), d(b.size.y()), d(b.size.z()), f.hold ? 1 : 0);
    tm += fmt::format("{},{},{},{},{}\n", t, d(f.ms_track2d), d(f.ms_frustum), d(f.ms_estimate), d(f.ms_fuse));
  }
  write_text_file(dir / "pred2d.csv", p2);
  write_text_file(dir / "pred3d.csv", p3);
  write_text_file(dir / "timing.csv", tm);
}

TrajectoryFiles read_track_result(const std::filesystem::path& dir) {
  TrajectoryFiles out;
  const CsvTable p2 = read_csv(dir / "pred2d.csv");
  const CsvTable p3 = read_csv(dir / "pred3d.csv");
  if (p2.rows.size() != p3.rows.size()) {
    fail(ErrorKind::kFormat, fmt::format("{}: pred2d.csv and pred3d.csv differ in length", dir.string()));
  }
  const std::size_t c[] = {p2.column("cx"), p2.column("cy"), p2.column("w"), p2.column("h"),
                           p2.column("fused_cx"), p2.column("fused_cy"), p2.column("fused_w"),
                           p2.column("fused_h")};
  for (const auto& r : p2.rows) {
    out.raw.push_back({r[c[0]], r[c[1]], r[c[2]], r[c[3]]});
    out.fused.push_back({r[c[4]], r[c[5]], r[c[6]], r[c[7]]});
  }
  const std::size_t k[] = {p3.column("cx"), p3.column("cy"), p3.column("cz"), p3.column("sx"),
                           p3.column("sy"), p3.column("sz"), p3.column("hold_flag")};
  for (const auto& r : p3.rows) {
    Box3D b;
    b.center = {r[k[0]], r[k[1]], r[k[2]]};
    b.size = {r[k[3]], r[k[4]], r[k[5]]};
    out.box3d.push_back(b);
    out.hold.push_back(static_cast<int>(r[k[6]]));
  }
  const CsvTable tm = read_csv(dir / "timing.csv");
  for (std::size_t i = 1; i < tm.rows.size(); ++i) {
    for (std::size_t j = 1; j < tm.rows[i].size(); ++j) out.tracking_ms += tm.rows[i][j];
  }
  return out;
}

}  // namespace asttrack
