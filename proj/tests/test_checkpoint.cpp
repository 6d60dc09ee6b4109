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

#include <cstring>
#include <filesystem>
#include <limits>

#include <gtest/gtest.h>

#include "asttrack/checkpoint.hpp"
#include "asttrack/errors.hpp"
#include "test_support.hpp"

namespace asttrack {
namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.layout.add_stack({{3, 4, nnet::Activation::kRelu}, {4, 2, nnet::Activation::kNone}});
  c.layout.add_stack({{5, 1, nnet::Activation::kNone}});
  c.params = nnet::glorot_init(c.layout, 9);
  c.params[1] = std::numeric_limits<float>::denorm_min();
  c.params[2] = -0.0f;
  c.metadata = {{"note", "unit"}, {"epochs", 3}};
  return c;
}

TEST(Checkpoint, RoundTripIsExact) {
  const Checkpoint c = sample_checkpoint();
  const std::string bytes = serialize_checkpoint(c);
  const Checkpoint d = deserialize_checkpoint(bytes);
  EXPECT_TRUE(d.layout == c.layout);
  ASSERT_EQ(d.params.size(), c.params.size());
  EXPECT_EQ(std::memcmp(d.params.data(), c.params.data(), c.params.size() * sizeof(float)), 0);
  EXPECT_EQ(d.metadata, c.metadata);
  EXPECT_EQ(serialize_checkpoint(d), bytes);
  EXPECT_EQ(bytes.substr(0, 4), "A3BX");
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "asttrack_ckpt_test";
  std::filesystem::create_directories(dir);
  const Checkpoint c = sample_checkpoint();
  save_checkpoint(dir / "m.a3bx", c);
  EXPECT_EQ(load_checkpoint(dir / "m.a3bx").params, c.params);
  test::expect_error(ErrorKind::kMissingData, [&] { load_checkpoint(dir / "absent.a3bx"); });
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, EverySingleByteFlipIsDetected) {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::string bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x10);
    test::expect_error(ErrorKind::kFormat, [&] { deserialize_checkpoint(bad); });
  }
}

TEST(Checkpoint, TruncationAndBadMagic) {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    test::expect_error(ErrorKind::kFormat, [&] { deserialize_checkpoint(bytes.substr(0, n)); });
  }
  std::string bad = bytes;
  bad[0] = 'X';
  test::expect_error(ErrorKind::kFormat, [&] { deserialize_checkpoint(bad); });
}

TEST(Checkpoint, RejectsParameterCountMismatch) {
  Checkpoint c = sample_checkpoint();
  c.params.pop_back();
  test::expect_error(ErrorKind::kDimensionMismatch, [&] { serialize_checkpoint(c); });
}

}  // namespace
}  // namespace asttrack
