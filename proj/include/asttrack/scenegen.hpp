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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "asttrack/geometry.hpp"
#include "asttrack/image.hpp"

namespace asttrack {

// Coarse-grained asteroid shape classes. Each one has its own lobe/bump
// spectrum; together with a texture id it forms a fine-grained category.
enum class ShapeClass : int { kA = 0, kB = 1, kC = 2 };

inline constexpr int kNumShapeClasses = 3;
inline constexpr int kNumTextures = 6;
inline constexpr int kNumSizeClasses = 14;

// Edge-length ratio triples (X, Y, Z) of the 14 default size categories.
struct SizeTaxonomy {
  std::array<Eigen::Vector3d, kNumSizeClasses> ratios;

  const Eigen::Vector3d& ratio(int class_id) const { return ratios.at(class_id); }
  int size() const { return kNumSizeClasses; }
};

const SizeTaxonomy& default_size_taxonomy();

struct SizeClassification {
  int class_id = 0;
  Eigen::Vector3d residual = Eigen::Vector3d::Zero();
};

// Normalizes the edges by the largest one and picks the nearest ratio triple
// (L2, ties to the lowest index). residual = normalized - ratio.
SizeClassification classify_size(const Eigen::Vector3d& size,
                                 const SizeTaxonomy& taxonomy = default_size_taxonomy());
inline SizeClassification classify_size(const Box3D& box,
                                        const SizeTaxonomy& taxonomy = default_size_taxonomy()) {
  return classify_size(box.size, taxonomy);
}

struct Mesh {
  std::vector<Point3> vertices;
  // Counter-clockwise when seen from outside.
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

// Unit icosphere built by repeated midpoint subdivision of an icosahedron.
Mesh icosphere(int subdivisions);

struct AsteroidParams {
  ShapeClass shape = ShapeClass::kA;
  int texture_id = 0;
  // Largest edge of the body-frame enclosing box, meters.
  double size_scale = 6.0;
  // Size category the body-frame box is built from; drawn from the seed
  // when unset.
  std::optional<int> ratio_class;
};

struct AsteroidModel {
  ShapeClass shape = ShapeClass::kA;
  int texture_id = 0;
  int ratio_class = 0;
  double size_scale = 0.0;
  Mesh mesh;                   // body frame, centered at the vertex centroid
  std::vector<double> albedo;  // per vertex, in [0, 1]
};

// Default size_scale range used by the dataset generator. Every draw gives an
// enclosing volume in [16, 1600] m^3 for every size category.
inline constexpr double kDefaultMinSizeScale = 4.5;
inline constexpr double kDefaultMaxSizeScale = 11.0;

AsteroidModel generate_asteroid(const AsteroidParams& params, std::uint64_t seed);

// A uniform-albedo model around an arbitrary mesh (used for analytic checks).
AsteroidModel make_uniform_model(Mesh mesh, double albedo = 0.5);

struct Pose {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
};

struct TrajectoryParams {
  int frames = 100;
  double sigma_t = 0.05;    // meters / frame, per axis
  double omega_max = 0.05;  // radians / frame
  Pose start;
  double z_min = 10.0;
  double z_max = 40.0;
  // Bound on |x| / z and |y| / z of the object center; keeps it in view.
  double max_lateral_x = 1e9;
  double max_lateral_y = 1e9;
};

struct TrajectorySample {
  std::vector<Pose> poses;
  // Accepted translation increments (poses[t+1] - poses[t]).
  std::vector<Eigen::Vector3d> increments;
};

TrajectorySample sample_trajectory(std::uint64_t seed, const TrajectoryParams& params);

// Uniformly distributed rotation.
Eigen::Quaterniond random_rotation(std::uint64_t seed);

struct RenderOptions {
  std::uint64_t background_seed = 0;
  double star_density = 0.002;  // stars per pixel
  double exposure_gain = 2.0;
  double ambient = 0.05;
  Eigen::Vector3d light_direction = Eigen::Vector3d(-0.45, -0.55, -0.7);  // towards the light
};

struct Frame {
  Image8 image;
  PointCloud cloud;  // camera-facing surface samples, one per covered pixel
  Box2D anno2d;
  Box3D anno3d;
  double illumination = 0.0;
};

// Model vertices in the camera frame.
PointCloud transform_vertices(const AsteroidModel& model, const Pose& pose);

// Z-buffered rendering of the model's front surface. The cloud holds the
// exact surface point under every covered pixel center; the image is the
// Lambert-shaded splat of that cloud over a starfield, scaled by
// illumination. Throws kVisibility when the object covers no pixel or is not
// entirely in front of the camera.
Frame render_frame(const AsteroidModel& model, const Pose& pose,
                   const CameraIntrinsics& cam, double illumination,
                   const RenderOptions& options = {});

}  // namespace asttrack
