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

#include <span>
#include <vector>

#include <Eigen/Core>

namespace asttrack {

// Camera frame: z forward, x right, y down. Pixel coordinates grow with x/y;
// pixel (i, j) covers [i, i+1) x [j, j+1).
using Point3 = Eigen::Vector3d;
using PointCloud = std::vector<Point3>;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Pinhole camera derived from perspective angles and resolution.
class CameraIntrinsics {
 public:
  // fx = W / (2 tan(alpha_x / 2)), fy likewise, principal point at the image
  // center. Throws kInvalidParameter outside 0 < alpha < pi or W, H < 1.
  static CameraIntrinsics from_perspective(double alpha_x, double alpha_y,
                                           int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  double alpha_x() const { return alpha_x_; }
  double alpha_y() const { return alpha_y_; }
  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  // Single-point projection; the caller guarantees z > 0.
  Pixel project_unchecked(const Point3& p) const {
    return {fx_ * p.x() / p.z() + cx_, fy_ * p.y() / p.z() + cy_};
  }

 private:
  CameraIntrinsics() = default;

  int width_ = 0;
  int height_ = 0;
  double alpha_x_ = 0.0;
  double alpha_y_ = 0.0;
  double fx_ = 0.0;
  double fy_ = 0.0;
  double cx_ = 0.0;
  double cy_ = 0.0;
};

inline CameraIntrinsics intrinsics_from_perspective(double alpha_x, double alpha_y,
                                                    int width, int height) {
  return CameraIntrinsics::from_perspective(alpha_x, alpha_y, width, height);
}

// Axis-aligned image rectangle in center+size form (pixels).
struct Box2D {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double top() const { return cy - 0.5 * h; }
  double bottom() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  static Box2D from_extent(double u0, double v0, double u1, double v1) {
    return {0.5 * (u0 + u1), 0.5 * (v0 + v1), u1 - u0, v1 - v0};
  }

  bool operator==(const Box2D&) const = default;
};

// Axis-aligned cuboid in center+size form (meters, camera frame).
struct Box3D {
  Point3 center = Point3::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Zero();

  Point3 min_corner() const { return center - 0.5 * size; }
  Point3 max_corner() const { return center + 0.5 * size; }
  double volume() const { return size.x() * size.y() * size.z(); }

  bool operator==(const Box3D& o) const {
    return center == o.center && size == o.size;
  }
};

// Throws ProjectionDomainError naming the first point with z <= 0.
std::vector<Pixel> project(std::span<const Point3> points, const CameraIntrinsics& cam);

// Inverse of project at a given depth. Throws kProjectionDomain for z <= 0.
Point3 backproject(double u, double v, double z, const CameraIntrinsics& cam);

double iou3d(const Box3D& a, const Box3D& b);
double iou2d(const Box2D& a, const Box2D& b);

// Bird's-eye-view IoU on the x-z footprint (the camera looks along +z, so
// the top-down view discards y).
double iou_bev(const Box3D& a, const Box3D& b);

// center = (max + min) / 2, size = max - min per axis. Throws kEmptyInput.
Box3D min_enclosing_box(std::span<const Point3> points);

// Pixel-extent rectangle of a set of image points. Throws kEmptyInput.
Box2D extent_box(std::span<const Pixel> pixels);

}  // namespace asttrack
