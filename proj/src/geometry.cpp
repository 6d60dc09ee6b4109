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

#include "asttrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "asttrack/errors.hpp"

namespace asttrack {

CameraIntrinsics CameraIntrinsics::from_perspective(double alpha_x, double alpha_y,
                                                    int width, int height) {
  const auto valid_angle = [](double a) {
    return std::isfinite(a) && a > 0.0 && a < std::numbers::pi;
  };
  if (!valid_angle(alpha_x) || !valid_angle(alpha_y)) {
    fail(ErrorKind::kInvalidParameter,
         fmt::format("perspective angles must lie in (0, pi), got ({}, {})",
                     alpha_x, alpha_y));
  }
  if (width < 1 || height < 1) {
    fail(ErrorKind::kInvalidParameter,
         fmt::format("resolution must be positive, got {}x{}", width, height));
  }
  CameraIntrinsics cam;
  cam.width_ = width;
  cam.height_ = height;
  cam.alpha_x_ = alpha_x;
  cam.alpha_y_ = alpha_y;
  cam.fx_ = width / (2.0 * std::tan(alpha_x / 2.0));
  cam.fy_ = height / (2.0 * std::tan(alpha_y / 2.0));
  cam.cx_ = width / 2.0;
  cam.cy_ = height / 2.0;
  return cam;
}

std::vector<Pixel> project(std::span<const Point3> points, const CameraIntrinsics& cam) {
  std::vector<Pixel> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].z() > 0.0)) {
      throw ProjectionDomainError(
          i, fmt::format("point {} has z = {} (must be > 0)", i, points[i].z()));
    }
    out.push_back(cam.project_unchecked(points[i]));
  }
  return out;
}

Point3 backproject(double u, double v, double z, const CameraIntrinsics& cam) {
  if (!(z > 0.0)) {
    throw ProjectionDomainError(0, fmt::format("backproject depth {} must be > 0", z));
  }
  return {(u - cam.cx()) * z / cam.fx(), (v - cam.cy()) * z / cam.fy(), z};
}

namespace {

double overlap_1d(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::max(0.0, std::min(a_hi, b_hi) - std::max(a_lo, b_lo));
}

// Shared by the 2D and BEV variants: rectangles given as (center, size).
double rect_iou(double acx, double acy, double aw, double ah,
                double bcx, double bcy, double bw, double bh) {
  const double area_a = aw * ah;
  const double area_b = bw * bh;
  if (!(area_a > 0.0) || !(area_b > 0.0)) return 0.0;
  if (acx == bcx && acy == bcy && aw == bw && ah == bh) return 1.0;
  const double ix = overlap_1d(acx - 0.5 * aw, acx + 0.5 * aw, bcx - 0.5 * bw, bcx + 0.5 * bw);
  const double iy = overlap_1d(acy - 0.5 * ah, acy + 0.5 * ah, bcy - 0.5 * bh, bcy + 0.5 * bh);
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

}  // namespace

double iou3d(const Box3D& a, const Box3D& b) {
  const double vol_a = a.volume();
  const double vol_b = b.volume();
  if (!(vol_a > 0.0) || !(vol_b > 0.0)) return 0.0;
  if (a == b) return 1.0;
  const Point3 a_lo = a.min_corner(), a_hi = a.max_corner();
  const Point3 b_lo = b.min_corner(), b_hi = b.max_corner();
  double inter = 1.0;
  for (int k = 0; k < 3; ++k) inter *= overlap_1d(a_lo[k], a_hi[k], b_lo[k], b_hi[k]);
  if (inter <= 0.0) return 0.0;
  return std::clamp(inter / (vol_a + vol_b - inter), 0.0, 1.0);
}

double iou2d(const Box2D& a, const Box2D& b) {
  return rect_iou(a.cx, a.cy, a.w, a.h, b.cx, b.cy, b.w, b.h);
}

double iou_bev(const Box3D& a, const Box3D& b) {
  return rect_iou(a.center.x(), a.center.z(), a.size.x(), a.size.z(),
                  b.center.x(), b.center.z(), b.size.x(), b.size.z());
}

Box3D min_enclosing_box(std::span<const Point3> points) {
  if (points.empty()) fail(ErrorKind::kEmptyInput, "min_enclosing_box of an empty cloud");
  Point3 lo = points.front();
  Point3 hi = points.front();
  for (const Point3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {0.5 * (lo + hi), hi - lo};
}

Box2D extent_box(std::span<const Pixel> pixels) {
  if (pixels.empty()) fail(ErrorKind::kEmptyInput, "extent of an empty pixel set");
  double u0 = pixels.front().u, u1 = u0;
  double v0 = pixels.front().v, v1 = v0;
  for (const Pixel& p : pixels) {
    u0 = std::min(u0, p.u);
    u1 = std::max(u1, p.u);
    v0 = std::min(v0, p.v);
    v1 = std::max(v1, p.v);
  }
  Box2D box = Box2D::from_extent(u0, v0, u1, v1);
  // Center/size storage can round an edge inward by an ulp; widen until the
  // recomputed edges contain every pixel again.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  while (box.left() > u0 || box.right() < u1) box.w = std::nextafter(box.w, kInf);
  while (box.top() > v0 || box.bottom() < v1) box.h = std::nextafter(box.h, kInf);
  return box;
}

}  // namespace asttrack
