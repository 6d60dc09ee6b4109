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

// Single-object 2D trackers behind one init/update interface.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "asttrack/geometry.hpp"
#include "asttrack/image.hpp"

namespace asttrack {

class Tracker2D {
 public:
  virtual ~Tracker2D() = default;

  // Throws kInvalidParameter for a zero-area box or one that misses the image.
  virtual void init(const Image8& image, const Box2D& box, int frame_index) = 0;
  virtual Box2D update(const Image8& image, int frame_index) = 0;
  // Set by the last update when no candidate could be scored.
  virtual bool low_confidence() const = 0;
  virtual std::string name() const = 0;
};

struct TemplateTrackerConfig {
  int template_size = 32;
  std::vector<double> scales = {0.96, 1.0, 1.04};
  double learning_rate = 0.05;
  // Search window edge relative to the candidate box edge.
  double search_factor = 2.0;

  void validate() const;
};

struct TrackerState {
  // template_size^2 area-averaged intensities under `box`.
  std::vector<float> templ;
  Box2D box;
  double learning_rate = 0.0;
  std::vector<double> scales;
  bool low_confidence = false;

  bool operator==(const TrackerState&) const = default;
};

// Multi-scale normalized cross-correlation over a window around the previous
// box, with parabolic sub-sample peak refinement.
class TemplateTracker final : public Tracker2D {
 public:
  explicit TemplateTracker(TemplateTrackerConfig config = {});

  void init(const Image8& image, const Box2D& box, int frame_index) override;
  Box2D update(const Image8& image, int frame_index) override;
  bool low_confidence() const override { return state_.low_confidence; }
  std::string name() const override { return "template"; }

  const TrackerState& state() const { return state_; }

 private:
  TemplateTrackerConfig config_;
  TrackerState state_;
  bool initialized_ = false;
};

// Ground truth plus Gaussian jitter: center ~ N(0, (sigma w)^2) per axis and
// size ~ N(0, (sigma w / 2)^2), clipped to the image. Each frame draws from
// its own substream, so the box of frame t does not depend on call history.
class OracleTracker final : public Tracker2D {
 public:
  OracleTracker(std::vector<Box2D> ground_truth, double sigma, std::uint64_t seed);

  void init(const Image8& image, const Box2D& box, int frame_index) override;
  Box2D update(const Image8& image, int frame_index) override;
  bool low_confidence() const override { return false; }
  std::string name() const override { return "oracle"; }

  // The box emitted for frame t of an image of the given size.
  Box2D box_at(int frame_index, int width, int height) const;

 private:
  std::vector<Box2D> ground_truth_;
  double sigma_;
  std::uint64_t seed_;
};

// Intersection of a box with [0, width] x [0, height]; zero size when disjoint.
Box2D clip_to_image(const Box2D& box, int width, int height);

}  // namespace asttrack
