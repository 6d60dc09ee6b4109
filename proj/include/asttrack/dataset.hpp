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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "asttrack/geometry.hpp"
#include "asttrack/image.hpp"
#include "asttrack/scenegen.hpp"

namespace asttrack {

// A (shape class, texture) pair.
struct FineCategory {
  ShapeClass shape = ShapeClass::kA;
  int texture_id = 0;

  bool operator==(const FineCategory&) const = default;
};

struct CameraConfig {
  double alpha_x = 1.0471975511965976;  // 60 degrees
  double alpha_y = 0.8172757101952219;  // square pixels at 320x240
  int width = 320;
  int height = 240;

  CameraIntrinsics intrinsics() const {
    return CameraIntrinsics::from_perspective(alpha_x, alpha_y, width, height);
  }
};

struct DatasetConfig {
  std::uint64_t master_seed = 7;
  int train_sequences = 24;
  int test_sequences = 9;
  int frames = 100;
  CameraConfig camera;
  std::vector<FineCategory> train_categories;  // defaults to textures 0-3
  std::vector<FineCategory> test_categories;   // defaults to textures 4-5
  double sigma_t = 0.05;
  double omega_max = 0.05;
  double illumination_min = 0.1;
  double illumination_max = 0.5;
  double size_scale_min = kDefaultMinSizeScale;
  double size_scale_max = kDefaultMaxSizeScale;
  // Initial distance is chosen so the largest edge spans this many pixels,
  // then clamped to [start_z_min, start_z_max].
  double start_extent_min_px = 60.0;
  double start_extent_max_px = 110.0;
  double start_z_min = 12.0;
  double start_z_max = 38.0;
  // Initial projected center offset, as a fraction of the half image size.
  // Values near 1 start some objects partly outside the frame.
  double start_offset_fraction = 1.0 / 3.0;
  // Object center is kept within this fraction of the half field of view.
  double lateral_limit_fraction = 0.6;
  int jobs = 1;

  // Fills empty category lists with the default disjoint split and checks
  // that the two splits share no fine-grained category.
  void validate_and_complete();
};

nlohmann::json to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

struct SequenceMeta {
  std::string id;
  std::string split;
  CameraConfig camera;
  FineCategory category;
  int ratio_class = 0;
  double size_scale = 0.0;
  double illumination = 0.0;
  int frames = 0;
  std::uint64_t asteroid_seed = 0;
  std::uint64_t trajectory_seed = 0;
  std::uint64_t background_seed = 0;
};

nlohmann::json to_json(const SequenceMeta& meta);
SequenceMeta sequence_meta_from_json(const nlohmann::json& j);

// Writes <root>/dataset.json and <root>/{train,test}/<seq_id>/...
void generate_dataset(const std::filesystem::path& root, DatasetConfig config);

// Renders one sequence in memory (the generator writes exactly this).
struct GeneratedSequence {
  SequenceMeta meta;
  std::vector<Frame> frames;
};
GeneratedSequence generate_sequence(const DatasetConfig& config, const std::string& split,
                                    int index, const FineCategory& category);

struct SequenceFrame {
  Image8 image;  // empty when loaded without images
  PointCloud cloud;
  Box2D anno2d;
  Box3D anno3d;
};

struct Sequence {
  SequenceMeta meta;
  std::vector<SequenceFrame> frames;

  CameraIntrinsics camera() const { return meta.camera.intrinsics(); }
};

void write_sequence(const std::filesystem::path& dir, const GeneratedSequence& seq);
Sequence load_sequence(const std::filesystem::path& dir, bool load_images = true);

// Sequence directories of a split, sorted by id. Throws kMissingData when the
// split directory does not exist.
std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& root,
                                                  const std::string& split);

// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const Image8& image);
Image8 read_pgm(const std::filesystem::path& path);

// PCB1: magic, u32 count, count x 3 float32, little-endian.
void write_pcb(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_pcb(const std::filesystem::path& path);

std::string box2d_csv(const std::vector<Box2D>& boxes);
std::string box3d_csv(const std::vector<Box3D>& boxes);
std::vector<Box2D> read_box2d_csv(const std::filesystem::path& path);
std::vector<Box3D> read_box3d_csv(const std::filesystem::path& path);

}  // namespace asttrack
