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

#include "asttrack/tracker2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "asttrack/errors.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

namespace {

// Summed-area table of the image seen as piecewise constant over unit pixel
// cells. Queries at fractional coordinates are exact (bilinear in the table),
// and everything outside the image reads as zero.
class AreaSampler {
 public:
  explicit AreaSampler(const Image8& image)
      : w_(image.width), h_(image.height), table_(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0.0) {
    for (int y = 0; y < h_; ++y) {
      double row = 0.0;
      for (int x = 0; x < w_; ++x) {
        row += image.at(x, y);
        at(x + 1, y + 1) = at(x + 1, y) + row;
      }
    }
  }

  // Mean intensity over [x0, x1) x [y0, y1).
  double mean(double x0, double y0, double x1, double y1) const {
    const double area = (x1 - x0) * (y1 - y0);
    if (area <= 0.0) return 0.0;
    return (integral(x1, y1) - integral(x0, y1) - integral(x1, y0) + integral(x0, y0)) / area;
  }

  // nx x ny grid of cell means starting at (x0, y0) with the given steps.
  std::vector<float> grid(double x0, double y0, double sx, double sy, int nx, int ny) const {
    std::vector<float> out(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
      const double ya = y0 + j * sy;
      for (int i = 0; i < nx; ++i) {
        const double xa = x0 + i * sx;
        out[static_cast<std::size_t>(j) * nx + i] = static_cast<float>(mean(xa, ya, xa + sx, ya + sy));
      }
    }
    return out;
  }

 private:
  double& at(int x, int y) { return table_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  double at(int x, int y) const { return table_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }

  double integral(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(w_));
    y = std::clamp(y, 0.0, static_cast<double>(h_));
    const int ix = std::min(static_cast<int>(x), w_ - 1);
    const int iy = std::min(static_cast<int>(y), h_ - 1);
    const double fx = x - ix, fy = y - iy;
    const double a = at(ix, iy), b = at(ix + 1, iy), c = at(ix, iy + 1), d = at(ix + 1, iy + 1);
    return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
  }

  int w_, h_;
  std::vector<double> table_;
};

std::vector<float> sample_box(const AreaSampler& sampler, const Box2D& box, int n) {
  return sampler.grid(box.left(), box.top(), box.w / n, box.h / n, n, n);
}

// Zero-mean, unit-norm copy; empty when the patch is flat.
std::vector<double> normalized(const std::vector<float>& patch) {
  double mean = 0.0;
  for (float v : patch) mean += v;
  mean /= static_cast<double>(patch.size());
  std::vector<double> out(patch.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < patch.size(); ++i) {
    out[i] = patch[i] - mean;
    norm2 += out[i] * out[i];
  }
  if (norm2 < 1e-4 * static_cast<double>(patch.size())) return {};
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : out) v *= inv;
  return out;
}

constexpr double kUndefined = -std::numeric_limits<double>::infinity();

// NCC of a t x t unit template against every placement in an m x m grid.
std::vector<double> ncc_map(const std::vector<double>& tmpl, int t, const std::vector<float>& grid, int m) {
  const int span = m - t + 1;
  std::vector<double> score(static_cast<std::size_t>(span) * span, kUndefined);
  const double n = static_cast<double>(t) * t;
  for (int py = 0; py < span; ++py) {
    for (int px = 0; px < span; ++px) {
      double dot = 0.0, sum = 0.0, sum2 = 0.0;
      for (int j = 0; j < t; ++j) {
        const float* g = grid.data() + static_cast<std::size_t>(py + j) * m + px;
        const double* tp = tmpl.data() + static_cast<std::size_t>(j) * t;
        for (int i = 0; i < t; ++i) {
          dot += tp[i] * g[i];
          sum += g[i];
          sum2 += static_cast<double>(g[i]) * g[i];
        }
      }
      const double var = sum2 - sum * sum / n;
      if (var < 1e-4 * n) continue;
      score[static_cast<std::size_t>(py) * span + px] = dot / std::sqrt(var);
    }
  }
  return score;
}

// Vertex offset of the parabola through (-1, l), (0, c), (1, r).
double parabolic_offset(double l, double c, double r) {
  if (l == kUndefined || r == kUndefined) return 0.0;
  const double denom = l - 2.0 * c + r;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
}

void check_box(const Box2D& box, const Image8& image) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) {
    fail(ErrorKind::kInvalidParameter, fmt::format("tracker init box has zero area ({} x {})", box.w, box.h));
  }
  if (clip_to_image(box, image.width, image.height).area() <= 0.0) {
    fail(ErrorKind::kInvalidParameter, "tracker init box does not intersect the image");
  }
}

}  // namespace

Box2D clip_to_image(const Box2D& box, int width, int height) {
  const double l = std::max(box.left(), 0.0), r = std::min(box.right(), static_cast<double>(width));
  const double t = std::max(box.top(), 0.0), b = std::min(box.bottom(), static_cast<double>(height));
  if (r <= l || b <= t) return {std::clamp(box.cx, 0.0, static_cast<double>(width)),
                                std::clamp(box.cy, 0.0, static_cast<double>(height)), 0.0, 0.0};
  return Box2D::from_extent(l, t, r, b);
}

void TemplateTrackerConfig::validate() const {
  if (template_size < 4) fail(ErrorKind::kInvalidParameter, "template_size must be >= 4");
  if (scales.empty()) fail(ErrorKind::kInvalidParameter, "scale set is empty");
  for (double s : scales) {
    if (!(s > 0.0)) fail(ErrorKind::kInvalidParameter, "scales must be positive");
  }
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) {
    fail(ErrorKind::kInvalidParameter, "template learning rate must be in [0, 1]");
  }
  if (!(search_factor > 1.0)) fail(ErrorKind::kInvalidParameter, "search_factor must exceed 1");
}

TemplateTracker::TemplateTracker(TemplateTrackerConfig config) : config_(std::move(config)) {
  config_.validate();
  // Scale 1.0 goes first so that ties keep the current size.
  std::stable_sort(config_.scales.begin(), config_.scales.end(),
                   [](double a, double b) { return std::abs(a - 1.0) < std::abs(b - 1.0); });
}

void TemplateTracker::init(const Image8& image, const Box2D& box, int /*frame_index*/) {
  check_box(box, image);
  const AreaSampler sampler(image);
  state_ = TrackerState{};
  state_.templ = sample_box(sampler, box, config_.template_size);
  state_.box = box;
  state_.learning_rate = config_.learning_rate;
  state_.scales = config_.scales;
  initialized_ = true;
}

Box2D TemplateTracker::update(const Image8& image, int /*frame_index*/) {
  if (!initialized_) fail(ErrorKind::kConfiguration, "template tracker updated before init");
  const int t = config_.template_size;
  // Even margin so that the zero-shift placement sits on the grid.
  const int margin = static_cast<int>(std::ceil((config_.search_factor - 1.0) * t / 2.0));
  const int m = t + 2 * margin;
  const int span = m - t + 1;
  const Box2D prev = state_.box;
  state_.low_confidence = true;

  const std::vector<double> tmpl = normalized(state_.templ);
  if (tmpl.empty()) return prev;

  const AreaSampler sampler(image);
  double best = kUndefined;
  Box2D best_box = prev;
  for (double s : config_.scales) {
    const double sx = s * prev.w / t, sy = s * prev.h / t;
    const std::vector<float> grid = sampler.grid(prev.cx - 0.5 * m * sx, prev.cy - 0.5 * m * sy, sx, sy, m, m);
    const std::vector<double> score = ncc_map(tmpl, t, grid, m);
    const auto it = std::max_element(score.begin(), score.end());
    if (*it == kUndefined || !(*it > best)) continue;
    best = *it;
    const int idx = static_cast<int>(it - score.begin());
    const int px = idx % span, py = idx / span;
    auto at = [&](int x, int y) {
      if (x < 0 || y < 0 || x >= span || y >= span) return kUndefined;
      return score[static_cast<std::size_t>(y) * span + x];
    };
    const double dx = px + parabolic_offset(at(px - 1, py), *it, at(px + 1, py)) - margin;
    const double dy = py + parabolic_offset(at(px, py - 1), *it, at(px, py + 1)) - margin;
    best_box = {prev.cx + dx * sx, prev.cy + dy * sy, s * prev.w, s * prev.h};
  }
  if (best == kUndefined) return prev;

  const Box2D clipped = clip_to_image(best_box, image.width, image.height);
  if (clipped.area() <= 0.0) return prev;
  state_.box = clipped;
  state_.low_confidence = false;

  const std::vector<float> patch = sample_box(sampler, clipped, t);
  if (!normalized(patch).empty()) {
    const float a = static_cast<float>(state_.learning_rate);
    for (std::size_t i = 0; i < patch.size(); ++i) {
      state_.templ[i] = (1.0f - a) * state_.templ[i] + a * patch[i];
    }
  }
  return state_.box;
}

OracleTracker::OracleTracker(std::vector<Box2D> ground_truth, double sigma, std::uint64_t seed)
    : ground_truth_(std::move(ground_truth)), sigma_(sigma), seed_(seed) {
  if (!(sigma_ >= 0.0)) fail(ErrorKind::kInvalidParameter, "oracle noise level must be >= 0");
}

void OracleTracker::init(const Image8& image, const Box2D& box, int /*frame_index*/) { check_box(box, image); }

Box2D OracleTracker::update(const Image8& image, int frame_index) {
  return box_at(frame_index, image.width, image.height);
}

Box2D OracleTracker::box_at(int frame_index, int width, int height) const {
  if (frame_index < 0 || frame_index >= static_cast<int>(ground_truth_.size())) {
    fail(ErrorKind::kInvalidParameter, fmt::format("oracle tracker has no ground truth for frame {}", frame_index));
  }
  const Box2D& gt = ground_truth_[static_cast<std::size_t>(frame_index)];
  Rng rng = make_rng(seed_, "oracle_tracker", static_cast<std::uint64_t>(frame_index));
  std::normal_distribution<double> unit(0.0, 1.0);
  const double c_sd = sigma_ * gt.w, s_sd = 0.5 * sigma_ * gt.w;
  Box2D box{gt.cx + c_sd * unit(rng), gt.cy + c_sd * unit(rng), gt.w + s_sd * unit(rng), gt.h + s_sd * unit(rng)};
  box.w = std::max(box.w, 1.0);
  box.h = std::max(box.h, 1.0);
  const bool inside = box.left() >= 0.0 && box.top() >= 0.0 && box.right() <= width && box.bottom() <= height;
  return inside ? box : clip_to_image(box, width, height);
}

}  // namespace asttrack
