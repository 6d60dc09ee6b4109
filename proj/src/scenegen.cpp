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

#include "asttrack/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

#include <fmt/format.h>

#include "asttrack/errors.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

const SizeTaxonomy& default_size_taxonomy() {
  static const SizeTaxonomy taxonomy = [] {
    constexpr double h = 1.0 / 2.0, t = 1.0 / 3.0, tt = 2.0 / 3.0;
    SizeTaxonomy tx;
    tx.ratios = {
        Eigen::Vector3d(1, 1, 1),   Eigen::Vector3d(h, 1, 1),   Eigen::Vector3d(t, 1, 1),
        Eigen::Vector3d(tt, 1, 1),  Eigen::Vector3d(1, h, 1),   Eigen::Vector3d(1, tt, 1),
        Eigen::Vector3d(1, 1, h),   Eigen::Vector3d(1, 1, tt),  Eigen::Vector3d(h, h, 1),
        Eigen::Vector3d(tt, tt, 1), Eigen::Vector3d(h, 1, h),   Eigen::Vector3d(tt, 1, tt),
        Eigen::Vector3d(1, h, h),   Eigen::Vector3d(1, tt, tt),
    };
    return tx;
  }();
  return taxonomy;
}

SizeClassification classify_size(const Eigen::Vector3d& size, const SizeTaxonomy& taxonomy) {
  const double largest = size.maxCoeff();
  if (!(largest > 0.0) || !size.allFinite()) {
    fail(ErrorKind::kDegenerateInput,
         fmt::format("cannot classify box size ({}, {}, {})", size.x(), size.y(), size.z()));
  }
  const Eigen::Vector3d normalized = size / largest;
  SizeClassification best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < taxonomy.size(); ++k) {
    const double d = (normalized - taxonomy.ratio(k)).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best.class_id = k;
    }
  }
  best.residual = normalized - taxonomy.ratio(best.class_id);
  return best;
}

Mesh icosphere(int subdivisions) {
  if (subdivisions < 0) fail(ErrorKind::kInvalidParameter, "negative subdivision level");
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh mesh;
  mesh.vertices = {{-1, p, 0}, {1, p, 0},  {-1, -p, 0}, {1, -p, 0},
                   {0, -1, p}, {0, 1, p},  {0, -1, -p}, {0, 1, -p},
                   {p, 0, -1}, {p, 0, 1},  {-p, 0, -1}, {-p, 0, 1}};
  for (auto& v : mesh.vertices) v.normalize();
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
      const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
      const auto ab = midpoint(t[0], t[1]);
      const auto bc = midpoint(t[1], t[2]);
      const auto ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(next);
  }
  // Orient every face outward.
  for (auto& t : mesh.triangles) {
    const Point3& a = mesh.vertices[t[0]];
    const Point3& b = mesh.vertices[t[1]];
    const Point3& c = mesh.vertices[t[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(t[1], t[2]);
  }
  return mesh;
}

namespace {

constexpr int kIcosphereLevel = 3;

Eigen::Vector3d random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Eigen::Vector3d v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

// A radial Gaussian kernel on the unit sphere.
struct Bump {
  Eigen::Vector3d direction;
  double amplitude;
  double width;  // radians
};

struct ShapeSpectrum {
  int lobes;
  double lobe_amp_lo, lobe_amp_hi, lobe_width;
  int bumps;
  double bump_sigma, bump_width;
  int craters;
  double crater_depth_lo, crater_depth_hi, crater_width;
};

ShapeSpectrum spectrum_for(ShapeClass shape) {
  switch (shape) {
    case ShapeClass::kA:  // elongated potato
      return {3, 0.15, 0.35, 0.8, 20, 0.05, 0.25, 0, 0.0, 0.0, 0.0};
    case ShapeClass::kB:  // multi-lobed, lumpy
      return {5, -0.20, 0.30, 0.6, 40, 0.06, 0.20, 0, 0.0, 0.0, 0.0};
    case ShapeClass::kC:  // rounded and cratered
      return {2, 0.10, 0.25, 1.0, 30, 0.04, 0.30, 30, 0.03, 0.10, 0.15};
  }
  fail(ErrorKind::kInvalidParameter, "unknown shape class");
}

std::uint64_t hash3(std::int64_t x, std::int64_t y, std::int64_t z, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::int64_t c : {x, y, z}) {
    h ^= static_cast<std::uint64_t>(c) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 31;
  }
  return h;
}

double lattice_value(std::int64_t x, std::int64_t y, std::int64_t z, std::uint64_t seed) {
  return static_cast<double>(hash3(x, y, z, seed) >> 11) * 0x1.0p-53;
}

// Trilinear value noise with smoothstep weights, in [0, 1].
double value_noise(const Eigen::Vector3d& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double acc = 0.0;
  for (int dz = 0; dz <= 1; ++dz) {
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
        acc += w * lattice_value(ix + dx, iy + dy, iz + dz, seed);
      }
    }
  }
  return acc;
}

struct TexturePreset {
  double frequency;
  int octaves;
  double contrast;
  double mean;
};

constexpr std::array<TexturePreset, kNumTextures> kTexturePresets = {{
    {2.0, 3, 1.6, 0.55},
    {3.5, 2, 1.4, 0.50},
    {5.0, 3, 1.8, 0.50},
    {1.5, 4, 1.2, 0.60},
    {7.0, 2, 1.6, 0.45},
    {2.5, 5, 2.0, 0.50},
}};

double albedo_at(const Eigen::Vector3d& dir, const TexturePreset& preset, std::uint64_t seed) {
  double amp = 1.0, freq = preset.frequency, sum = 0.0, norm = 0.0;
  for (int o = 0; o < preset.octaves; ++o) {
    sum += amp * value_noise(dir * freq + Eigen::Vector3d(17.0, 31.0, 47.0) * o,
                             seed + static_cast<std::uint64_t>(o));
    norm += amp;
    amp *= 0.5;
    freq *= 2.0;
  }
  const double n = sum / norm;  // in [0, 1], concentrated around 0.5
  return std::clamp(preset.mean + preset.contrast * (n - 0.5), 0.02, 1.0);
}

}  // namespace

AsteroidModel generate_asteroid(const AsteroidParams& params, std::uint64_t seed) {
  const int shape_index = static_cast<int>(params.shape);
  if (shape_index < 0 || shape_index >= kNumShapeClasses) {
    fail(ErrorKind::kInvalidParameter, fmt::format("invalid shape class {}", shape_index));
  }
  if (params.texture_id < 0 || params.texture_id >= kNumTextures) {
    fail(ErrorKind::kInvalidParameter, fmt::format("invalid texture id {}", params.texture_id));
  }
  if (!(params.size_scale > 0.0) || !std::isfinite(params.size_scale)) {
    fail(ErrorKind::kInvalidParameter,
         fmt::format("size_scale must be positive, got {}", params.size_scale));
  }
  if (params.ratio_class && (*params.ratio_class < 0 || *params.ratio_class >= kNumSizeClasses)) {
    fail(ErrorKind::kInvalidParameter, fmt::format("invalid size class {}", *params.ratio_class));
  }

  Rng rng = make_rng(seed, "asteroid.shape", static_cast<std::uint64_t>(shape_index));
  AsteroidModel model;
  model.shape = params.shape;
  model.texture_id = params.texture_id;
  model.size_scale = params.size_scale;
  model.ratio_class = params.ratio_class.value_or(
      std::uniform_int_distribution<int>(0, kNumSizeClasses - 1)(rng));
  model.mesh = icosphere(kIcosphereLevel);

  const ShapeSpectrum spec = spectrum_for(params.shape);
  std::vector<Bump> bumps;
  std::uniform_real_distribution<double> lobe_amp(spec.lobe_amp_lo, spec.lobe_amp_hi);
  for (int i = 0; i < spec.lobes; ++i) {
    const Eigen::Vector3d d = random_unit(rng);
    bumps.push_back({d, lobe_amp(rng), spec.lobe_width});
  }
  std::normal_distribution<double> bump_amp(0.0, spec.bump_sigma);
  for (int i = 0; i < spec.bumps; ++i) {
    const Eigen::Vector3d d = random_unit(rng);
    bumps.push_back({d, bump_amp(rng), spec.bump_width});
  }
  if (spec.craters > 0) {
    std::uniform_real_distribution<double> depth(spec.crater_depth_lo, spec.crater_depth_hi);
    for (int i = 0; i < spec.craters; ++i) {
      const Eigen::Vector3d d = random_unit(rng);
      bumps.push_back({d, -depth(rng), spec.crater_width});
    }
  }

  for (Point3& v : model.mesh.vertices) {
    double r = 1.0;
    for (const Bump& b : bumps) {
      const double angle = std::acos(std::clamp(v.dot(b.direction), -1.0, 1.0));
      r += b.amplitude * std::exp(-0.5 * angle * angle / (b.width * b.width));
    }
    v *= std::max(r, 0.35);
  }

  // Albedo is a function of the undeformed direction so texture does not
  // stretch with the size class.
  const TexturePreset& preset = kTexturePresets[static_cast<std::size_t>(params.texture_id)];
  const std::uint64_t tex_seed = derive_seed(seed, "asteroid.texture",
                                             static_cast<std::uint64_t>(params.texture_id));
  model.albedo.reserve(model.mesh.vertices.size());
  for (const Point3& v : model.mesh.vertices) {
    model.albedo.push_back(albedo_at(v.normalized(), preset, tex_seed));
  }

  // Stretch so the body-frame enclosing box has edges ratio * size_scale,
  // then move the vertex centroid to the origin.
  const Box3D raw = min_enclosing_box(model.mesh.vertices);
  const Eigen::Vector3d target =
      default_size_taxonomy().ratio(model.ratio_class) * params.size_scale;
  const Eigen::Vector3d scale = target.cwiseQuotient(raw.size);
  Point3 centroid = Point3::Zero();
  for (Point3& v : model.mesh.vertices) {
    v = v.cwiseProduct(scale);
    centroid += v;
  }
  centroid /= static_cast<double>(model.mesh.vertices.size());
  for (Point3& v : model.mesh.vertices) v -= centroid;
  return model;
}

AsteroidModel make_uniform_model(Mesh mesh, double albedo) {
  AsteroidModel model;
  model.albedo.assign(mesh.vertices.size(), albedo);
  model.mesh = std::move(mesh);
  const Box3D box = min_enclosing_box(model.mesh.vertices);
  model.size_scale = box.size.maxCoeff();
  return model;
}

Eigen::Quaterniond random_rotation(std::uint64_t seed) {
  Rng rng = make_rng(seed, "rotation");
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

TrajectorySample sample_trajectory(std::uint64_t seed, const TrajectoryParams& params) {
  if (params.frames < 1) fail(ErrorKind::kInvalidParameter, "trajectory needs at least one frame");
  if (!(params.sigma_t >= 0.0) || !(params.omega_max >= 0.0)) {
    fail(ErrorKind::kInvalidParameter, "sigma_t and omega_max must be non-negative");
  }
  if (!(params.z_min < params.z_max)) fail(ErrorKind::kInvalidParameter, "empty depth band");

  const auto inside = [&](const Eigen::Vector3d& t) {
    return t.z() >= params.z_min && t.z() <= params.z_max &&
           std::abs(t.x()) <= params.max_lateral_x * t.z() &&
           std::abs(t.y()) <= params.max_lateral_y * t.z();
  };
  if (!inside(params.start.translation)) {
    fail(ErrorKind::kInvalidParameter, "trajectory start lies outside the allowed region");
  }

  Rng rng = make_rng(seed, "trajectory");
  std::normal_distribution<double> step(0.0, 1.0);
  std::uniform_real_distribution<double> rate(0.0, 1.0);

  TrajectorySample out;
  out.poses.reserve(static_cast<std::size_t>(params.frames));
  out.poses.push_back(params.start);
  out.poses.back().rotation.normalize();
  for (int t = 1; t < params.frames; ++t) {
    const Pose& prev = out.poses.back();
    Eigen::Vector3d delta = Eigen::Vector3d::Zero();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Eigen::Vector3d d(params.sigma_t * step(rng), params.sigma_t * step(rng),
                              params.sigma_t * step(rng));
      if (inside(prev.translation + d)) {
        delta = d;
        break;
      }
    }
    const Eigen::Vector3d axis = random_unit(rng);
    const double angle = params.omega_max * rate(rng);
    Pose next;
    next.translation = prev.translation + delta;
    next.rotation = (Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)) * prev.rotation).normalized();
    out.increments.push_back(delta);
    out.poses.push_back(next);
  }
  return out;
}

PointCloud transform_vertices(const AsteroidModel& model, const Pose& pose) {
  const Eigen::Matrix3d r = pose.rotation.normalized().toRotationMatrix();
  PointCloud out;
  out.reserve(model.mesh.vertices.size());
  for (const Point3& v : model.mesh.vertices) out.push_back(r * v + pose.translation);
  return out;
}

namespace {

std::uint8_t to_intensity(double radiance, double gain, double illumination) {
  const double value = std::round(255.0 * gain * illumination * radiance);
  return static_cast<std::uint8_t>(std::clamp(value, 0.0, 255.0));
}

}  // namespace

Frame render_frame(const AsteroidModel& model, const Pose& pose, const CameraIntrinsics& cam,
                   double illumination, const RenderOptions& options) {
  if (!(illumination > 0.0) || illumination > 1.0) {
    fail(ErrorKind::kInvalidParameter,
         fmt::format("illumination must lie in (0, 1], got {}", illumination));
  }
  const PointCloud verts = transform_vertices(model, pose);
  for (const Point3& v : verts) {
    if (!(v.z() > 0.0)) fail(ErrorKind::kVisibility, "object is not entirely in front of the camera");
  }

  Frame frame;
  frame.illumination = illumination;
  frame.anno3d = min_enclosing_box(verts);

  const int W = cam.width(), H = cam.height();
  const std::size_t npix = static_cast<std::size_t>(W) * H;
  std::vector<double> depth(npix, std::numeric_limits<double>::infinity());
  std::vector<std::int32_t> owner(npix, -1);
  const std::vector<Pixel> proj = project(verts, cam);

  for (std::size_t ti = 0; ti < model.mesh.triangles.size(); ++ti) {
    const auto& tri = model.mesh.triangles[ti];
    const Point3& p0 = verts[tri[0]];
    const Point3& p1 = verts[tri[1]];
    const Point3& p2 = verts[tri[2]];
    const Eigen::Vector3d n = (p1 - p0).cross(p2 - p0);
    if (n.dot(p0) >= 0.0) continue;  // back face
    const Pixel& a = proj[tri[0]];
    const Pixel& b = proj[tri[1]];
    const Pixel& c = proj[tri[2]];
    const double area = (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
    if (area == 0.0) continue;
    const int i0 = std::max(0, static_cast<int>(std::floor(std::min({a.u, b.u, c.u}) - 0.5)));
    const int i1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({a.u, b.u, c.u}) - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::floor(std::min({a.v, b.v, c.v}) - 0.5)));
    const int j1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({a.v, b.v, c.v}) - 0.5)));
    const double nd0 = n.dot(p0);
    for (int j = j0; j <= j1; ++j) {
      const double v = j + 0.5;
      for (int i = i0; i <= i1; ++i) {
        const double u = i + 0.5;
        const double e0 = (b.u - a.u) * (v - a.v) - (b.v - a.v) * (u - a.u);
        const double e1 = (c.u - b.u) * (v - b.v) - (c.v - b.v) * (u - b.u);
        const double e2 = (a.u - c.u) * (v - c.v) - (a.v - c.v) * (u - c.u);
        const bool in = area > 0.0 ? (e0 >= 0 && e1 >= 0 && e2 >= 0)
                                   : (e0 <= 0 && e1 <= 0 && e2 <= 0);
        if (!in) continue;
        const Eigen::Vector3d ray((u - cam.cx()) / cam.fx(), (v - cam.cy()) / cam.fy(), 1.0);
        const double denom = n.dot(ray);
        if (denom >= 0.0) continue;
        const double z = nd0 / denom;
        const std::size_t idx = static_cast<std::size_t>(j) * W + i;
        if (z > 0.0 && z < depth[idx]) {
          depth[idx] = z;
          owner[idx] = static_cast<std::int32_t>(ti);
        }
      }
    }
  }

  frame.image = Image8(W, H, 0);
  {
    Rng stars = make_rng(options.background_seed, "starfield");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto count = static_cast<std::size_t>(options.star_density * static_cast<double>(npix));
    for (std::size_t s = 0; s < count; ++s) {
      const auto idx = static_cast<std::size_t>(unit(stars) * static_cast<double>(npix)) % npix;
      const double brightness = 0.2 + 0.8 * unit(stars);
      frame.image.pixels[idx] = to_intensity(brightness, options.exposure_gain, illumination);
    }
  }

  const Eigen::Vector3d light = options.light_direction.normalized();
  std::vector<Pixel> covered;
  for (int j = 0; j < H; ++j) {
    for (int i = 0; i < W; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * W + i;
      if (owner[idx] < 0) continue;
      const auto& tri = model.mesh.triangles[static_cast<std::size_t>(owner[idx])];
      const Point3& p0 = verts[tri[0]];
      const Point3& p1 = verts[tri[1]];
      const Point3& p2 = verts[tri[2]];
      const double u = i + 0.5, v = j + 0.5;
      const double z = depth[idx];
      const Point3 p((u - cam.cx()) / cam.fx() * z, (v - cam.cy()) / cam.fy() * z, z);
      frame.cloud.push_back(p);
      covered.push_back(cam.project_unchecked(p));

      const Eigen::Vector3d n = (p1 - p0).cross(p2 - p0);
      const double twice_area = n.norm();
      const Eigen::Vector3d nn = n / twice_area;
      const double w0 = (p2 - p1).cross(p - p1).dot(nn) / twice_area;
      const double w1 = (p0 - p2).cross(p - p2).dot(nn) / twice_area;
      const double w2 = 1.0 - w0 - w1;
      const double albedo = std::clamp(w0 * model.albedo[tri[0]] + w1 * model.albedo[tri[1]] +
                                           w2 * model.albedo[tri[2]],
                                       0.0, 1.0);
      const double lambert = std::max(0.0, nn.dot(light));
      const double radiance = albedo * (options.ambient + (1.0 - options.ambient) * lambert);
      frame.image.pixels[idx] = to_intensity(radiance, options.exposure_gain, illumination);
    }
  }
  if (frame.cloud.empty()) fail(ErrorKind::kVisibility, "object covers no pixel");
  frame.anno2d = extent_box(covered);
  return frame;
}

}  // namespace asttrack
