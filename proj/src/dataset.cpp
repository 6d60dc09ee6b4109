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

#include "asttrack/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "asttrack/errors.hpp"
#include "asttrack/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary formats are written little-endian from native layout");

namespace asttrack {

void DatasetConfig::validate_and_complete() {
  if (train_categories.empty()) {
    for (int s = 0; s < kNumShapeClasses; ++s) {
      for (int t = 0; t < 4; ++t) train_categories.push_back({static_cast<ShapeClass>(s), t});
    }
  }
  if (test_categories.empty()) {
    for (int s = 0; s < kNumShapeClasses; ++s) {
      for (int t = 4; t < kNumTextures; ++t) test_categories.push_back({static_cast<ShapeClass>(s), t});
    }
  }
  for (const FineCategory& a : train_categories) {
    for (const FineCategory& b : test_categories) {
      if (a == b) {
        fail(ErrorKind::kConfiguration,
             fmt::format("fine-grained category (shape {}, texture {}) appears in both splits",
                         static_cast<int>(a.shape), a.texture_id));
      }
    }
  }
  for (const auto* list : {&train_categories, &test_categories}) {
    for (const FineCategory& c : *list) {
      if (static_cast<int>(c.shape) < 0 || static_cast<int>(c.shape) >= kNumShapeClasses ||
          c.texture_id < 0 || c.texture_id >= kNumTextures) {
        fail(ErrorKind::kConfiguration, "category out of range");
      }
    }
  }
  if (train_sequences < 0 || test_sequences < 0 || frames < 1) {
    fail(ErrorKind::kConfiguration, "sequence and frame counts must be positive");
  }
  if (!(illumination_min > 0.0) || illumination_max > 1.0 || illumination_min > illumination_max) {
    fail(ErrorKind::kConfiguration, "illumination range must lie in (0, 1]");
  }
  if (!(size_scale_min > 0.0) || size_scale_min > size_scale_max) {
    fail(ErrorKind::kConfiguration, "invalid size scale range");
  }
  if (!(lateral_limit_fraction > 0.0 && lateral_limit_fraction < 1.0) ||
      !(start_offset_fraction >= 0.0 && start_offset_fraction <= lateral_limit_fraction)) {
    fail(ErrorKind::kConfiguration,
         "need 0 <= start_offset_fraction <= lateral_limit_fraction < 1");
  }
  (void)camera.intrinsics();
}

namespace {

json categories_json(const std::vector<FineCategory>& cats) {
  json arr = json::array();
  for (const auto& c : cats) arr.push_back({{"shape_class", static_cast<int>(c.shape)}, {"texture_id", c.texture_id}});
  return arr;
}

std::vector<FineCategory> categories_from_json(const json& arr) {
  std::vector<FineCategory> out;
  for (const auto& c : arr) {
    out.push_back({static_cast<ShapeClass>(c.at("shape_class").get<int>()), c.at("texture_id").get<int>()});
  }
  return out;
}

json camera_json(const CameraConfig& c) {
  return {{"alpha_x", c.alpha_x}, {"alpha_y", c.alpha_y}, {"width", c.width}, {"height", c.height}};
}

CameraConfig camera_from_json(const json& j) {
  CameraConfig c;
  c.alpha_x = j.at("alpha_x").get<double>();
  c.alpha_y = j.at("alpha_y").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  return c;
}

}  // namespace

json to_json(const DatasetConfig& c) {
  return {
      {"master_seed", c.master_seed},
      {"train_sequences", c.train_sequences},
      {"test_sequences", c.test_sequences},
      {"frames", c.frames},
      {"camera", camera_json(c.camera)},
      {"train_categories", categories_json(c.train_categories)},
      {"test_categories", categories_json(c.test_categories)},
      {"sigma_t", c.sigma_t},
      {"omega_max", c.omega_max},
      {"illumination_min", c.illumination_min},
      {"illumination_max", c.illumination_max},
      {"size_scale_min", c.size_scale_min},
      {"size_scale_max", c.size_scale_max},
      {"start_extent_min_px", c.start_extent_min_px},
      {"start_extent_max_px", c.start_extent_max_px},
      {"start_z_min", c.start_z_min},
      {"start_z_max", c.start_z_max},
      {"start_offset_fraction", c.start_offset_fraction},
      {"lateral_limit_fraction", c.lateral_limit_fraction},
  };
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig c;
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.train_sequences = j.at("train_sequences").get<int>();
  c.test_sequences = j.at("test_sequences").get<int>();
  c.frames = j.at("frames").get<int>();
  c.camera = camera_from_json(j.at("camera"));
  c.train_categories = categories_from_json(j.at("train_categories"));
  c.test_categories = categories_from_json(j.at("test_categories"));
  c.sigma_t = j.at("sigma_t").get<double>();
  c.omega_max = j.at("omega_max").get<double>();
  c.illumination_min = j.at("illumination_min").get<double>();
  c.illumination_max = j.at("illumination_max").get<double>();
  c.size_scale_min = j.at("size_scale_min").get<double>();
  c.size_scale_max = j.at("size_scale_max").get<double>();
  c.start_extent_min_px = j.at("start_extent_min_px").get<double>();
  c.start_extent_max_px = j.at("start_extent_max_px").get<double>();
  c.start_z_min = j.at("start_z_min").get<double>();
  c.start_z_max = j.at("start_z_max").get<double>();
  c.start_offset_fraction = j.value("start_offset_fraction", c.start_offset_fraction);
  c.lateral_limit_fraction = j.value("lateral_limit_fraction", c.lateral_limit_fraction);
  return c;
}

json to_json(const SequenceMeta& m) {
  return {
      {"id", m.id},
      {"split", m.split},
      {"camera", camera_json(m.camera)},
      {"shape_class", static_cast<int>(m.category.shape)},
      {"texture_id", m.category.texture_id},
      {"ratio_class", m.ratio_class},
      {"size_scale", m.size_scale},
      {"illumination", m.illumination},
      {"frames", m.frames},
      {"seeds",
       {{"asteroid", m.asteroid_seed}, {"trajectory", m.trajectory_seed}, {"background", m.background_seed}}},
  };
}

SequenceMeta sequence_meta_from_json(const json& j) {
  SequenceMeta m;
  m.id = j.at("id").get<std::string>();
  m.split = j.at("split").get<std::string>();
  m.camera = camera_from_json(j.at("camera"));
  m.category.shape = static_cast<ShapeClass>(j.at("shape_class").get<int>());
  m.category.texture_id = j.at("texture_id").get<int>();
  m.ratio_class = j.at("ratio_class").get<int>();
  m.size_scale = j.at("size_scale").get<double>();
  m.illumination = j.at("illumination").get<double>();
  m.frames = j.at("frames").get<int>();
  const json& s = j.at("seeds");
  m.asteroid_seed = s.at("asteroid").get<std::uint64_t>();
  m.trajectory_seed = s.at("trajectory").get<std::uint64_t>();
  m.background_seed = s.at("background").get<std::uint64_t>();
  return m;
}

GeneratedSequence generate_sequence(const DatasetConfig& config, const std::string& split,
                                    int index, const FineCategory& category) {
  const std::uint64_t global = (split == "test" ? 1'000'000ULL : 0ULL) + static_cast<std::uint64_t>(index);
  GeneratedSequence out;
  SequenceMeta& meta = out.meta;
  meta.id = fmt::format("{:04d}", index);
  meta.split = split;
  meta.camera = config.camera;
  meta.category = category;
  meta.frames = config.frames;
  meta.asteroid_seed = derive_seed(config.master_seed, "seq.asteroid", global);
  meta.trajectory_seed = derive_seed(config.master_seed, "seq.trajectory", global);
  meta.background_seed = derive_seed(config.master_seed, "seq.background", global);

  Rng rng = make_rng(config.master_seed, "seq.params", global);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  meta.size_scale = config.size_scale_min + (config.size_scale_max - config.size_scale_min) * unit(rng);
  meta.illumination =
      config.illumination_min + (config.illumination_max - config.illumination_min) * unit(rng);

  const AsteroidModel model =
      generate_asteroid({category.shape, category.texture_id, meta.size_scale, std::nullopt},
                        meta.asteroid_seed);
  meta.ratio_class = model.ratio_class;

  const CameraIntrinsics cam = config.camera.intrinsics();
  const double extent_px = config.start_extent_min_px +
                           (config.start_extent_max_px - config.start_extent_min_px) * unit(rng);
  const double z0 = std::clamp(cam.fx() * meta.size_scale / extent_px, config.start_z_min,
                               config.start_z_max);
  const double du = (2.0 * unit(rng) - 1.0) * config.start_offset_fraction * cam.width() / 2.0;
  const double dv = (2.0 * unit(rng) - 1.0) * config.start_offset_fraction * cam.height() / 2.0;

  TrajectoryParams tp;
  tp.frames = config.frames;
  tp.sigma_t = config.sigma_t;
  tp.omega_max = config.omega_max;
  tp.start.translation = Eigen::Vector3d(du * z0 / cam.fx(), dv * z0 / cam.fy(), z0);
  tp.start.rotation = random_rotation(meta.trajectory_seed);
  tp.max_lateral_x = config.lateral_limit_fraction * std::tan(cam.alpha_x() / 2.0);
  tp.max_lateral_y = config.lateral_limit_fraction * std::tan(cam.alpha_y() / 2.0);
  const TrajectorySample traj = sample_trajectory(meta.trajectory_seed, tp);

  RenderOptions ro;
  ro.background_seed = meta.background_seed;
  out.frames.reserve(traj.poses.size());
  for (const Pose& pose : traj.poses) {
    out.frames.push_back(render_frame(model, pose, cam, meta.illumination, ro));
  }
  return out;
}

void generate_dataset(const fs::path& root, DatasetConfig config) {
  config.validate_and_complete();
  fs::create_directories(root);
  write_text_file(root / "dataset.json", to_json(config).dump(2) + "\n");

  struct Job {
    std::string split;
    int index;
    FineCategory category;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < config.train_sequences; ++i) {
    jobs.push_back({"train", i, config.train_categories[static_cast<std::size_t>(i) % config.train_categories.size()]});
  }
  for (int i = 0; i < config.test_sequences; ++i) {
    jobs.push_back({"test", i, config.test_categories[static_cast<std::size_t>(i) % config.test_categories.size()]});
  }
  parallel_for(jobs.size(), config.jobs, [&](std::size_t k) {
    const Job& job = jobs[k];
    const GeneratedSequence seq = generate_sequence(config, job.split, job.index, job.category);
    write_sequence(root / job.split / seq.meta.id, seq);
  });
}

std::string box2d_csv(const std::vector<Box2D>& boxes) {
  std::string s = "frame,cx,cy,w,h\n";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box2D& b = boxes[i];
    s += fmt::format("{},{},{},{},{}\n", i, format_double(b.cx), format_double(b.cy),
                     format_double(b.w), format_double(b.h));
  }
  return s;
}

std::string box3d_csv(const std::vector<Box3D>& boxes) {
  std::string s = "frame,cx,cy,cz,sx,sy,sz\n";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box3D& b = boxes[i];
    s += fmt::format("{},{},{},{},{},{},{}\n", i, format_double(b.center.x()),
                     format_double(b.center.y()), format_double(b.center.z()),
                     format_double(b.size.x()), format_double(b.size.y()), format_double(b.size.z()));
  }
  return s;
}

std::vector<Box2D> read_box2d_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cx = t.column("cx"), cy = t.column("cy"), w = t.column("w"), h = t.column("h");
  std::vector<Box2D> out;
  for (const auto& r : t.rows) out.push_back({r[cx], r[cy], r[w], r[h]});
  return out;
}

std::vector<Box3D> read_box3d_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cx = t.column("cx"), cy = t.column("cy"), cz = t.column("cz");
  const std::size_t sx = t.column("sx"), sy = t.column("sy"), sz = t.column("sz");
  std::vector<Box3D> out;
  for (const auto& r : t.rows) {
    out.push_back({Point3(r[cx], r[cy], r[cz]), Eigen::Vector3d(r[sx], r[sy], r[sz])});
  }
  return out;
}

void write_sequence(const fs::path& dir, const GeneratedSequence& seq) {
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "clouds");
  write_text_file(dir / "meta.json", to_json(seq.meta).dump(2) + "\n");
  std::vector<Box2D> a2;
  std::vector<Box3D> a3;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    write_pgm(dir / "frames" / fmt::format("{:06d}.pgm", i), seq.frames[i].image);
    write_pcb(dir / "clouds" / fmt::format("{:06d}.pcb", i), seq.frames[i].cloud);
    a2.push_back(seq.frames[i].anno2d);
    a3.push_back(seq.frames[i].anno3d);
  }
  write_text_file(dir / "anno2d.csv", box2d_csv(a2));
  write_text_file(dir / "anno3d.csv", box3d_csv(a3));
}

Sequence load_sequence(const fs::path& dir, bool load_images) {
  if (!fs::exists(dir / "meta.json")) fail(ErrorKind::kMissingData, "no meta.json in " + dir.string());
  Sequence seq;
  seq.meta = sequence_meta_from_json(json::parse(read_text_file(dir / "meta.json")));
  const auto a2 = read_box2d_csv(dir / "anno2d.csv");
  const auto a3 = read_box3d_csv(dir / "anno3d.csv");
  if (a2.size() != static_cast<std::size_t>(seq.meta.frames) || a3.size() != a2.size()) {
    fail(ErrorKind::kFormat, "annotation row count does not match frame count in " + dir.string());
  }
  seq.frames.resize(a2.size());
  for (std::size_t i = 0; i < a2.size(); ++i) {
    SequenceFrame& f = seq.frames[i];
    f.anno2d = a2[i];
    f.anno3d = a3[i];
    f.cloud = read_pcb(dir / "clouds" / fmt::format("{:06d}.pcb", i));
    if (load_images) f.image = read_pgm(dir / "frames" / fmt::format("{:06d}.pgm", i));
  }
  return seq;
}

std::vector<fs::path> list_sequences(const fs::path& root, const std::string& split) {
  const fs::path dir = root / split;
  if (!fs::is_directory(dir)) fail(ErrorKind::kMissingData, "no split directory " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_pgm(const fs::path& path, const Image8& image) {
  std::string data = fmt::format("P5\n{} {}\n255\n", image.width, image.height);
  data.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  write_text_file(path, data);
}

Image8 read_pgm(const fs::path& path) {
  const std::string data = read_text_file(path);
  std::istringstream in(data);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) {
    fail(ErrorKind::kFormat, "unsupported PGM " + path.string());
  }
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  Image8 img(w, h);
  if (data.size() < offset + img.pixels.size()) fail(ErrorKind::kFormat, "truncated PGM " + path.string());
  std::memcpy(img.pixels.data(), data.data() + offset, img.pixels.size());
  return img;
}

void write_pcb(const fs::path& path, const PointCloud& cloud) {
  std::string data("PCB1");
  const auto n = static_cast<std::uint32_t>(cloud.size());
  data.append(reinterpret_cast<const char*>(&n), sizeof(n));
  std::vector<float> xyz;
  xyz.reserve(cloud.size() * 3);
  for (const Point3& p : cloud) {
    xyz.push_back(static_cast<float>(p.x()));
    xyz.push_back(static_cast<float>(p.y()));
    xyz.push_back(static_cast<float>(p.z()));
  }
  data.append(reinterpret_cast<const char*>(xyz.data()), xyz.size() * sizeof(float));
  write_text_file(path, data);
}

PointCloud read_pcb(const fs::path& path) {
  const std::string data = read_text_file(path);
  if (data.size() < 8 || data.compare(0, 4, "PCB1") != 0) {
    fail(ErrorKind::kFormat, "bad PCB magic in " + path.string());
  }
  std::uint32_t n = 0;
  std::memcpy(&n, data.data() + 4, sizeof(n));
  if (data.size() != 8 + static_cast<std::size_t>(n) * 12) {
    fail(ErrorKind::kFormat, "PCB size mismatch in " + path.string());
  }
  PointCloud cloud(n);
  const char* p = data.data() + 8;
  for (std::uint32_t i = 0; i < n; ++i) {
    float xyz[3];
    std::memcpy(xyz, p + static_cast<std::size_t>(i) * 12, 12);
    cloud[i] = Point3(xyz[0], xyz[1], xyz[2]);
  }
  return cloud;
}

}  // namespace asttrack
