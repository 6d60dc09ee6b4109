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

#include "asttrack/checkpoint.hpp"

#include <cstring>

#include <zlib.h>

#include "asttrack/errors.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

namespace {

template <typename V>
void put(std::string& out, V value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(V));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

  template <typename V>
  V get() {
    if (pos_ + sizeof(V) > limit_) fail(ErrorKind::kFormat, "checkpoint truncated");
    V v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }

  std::string get_bytes(std::size_t n) {
    if (pos_ + n > limit_) fail(ErrorKind::kFormat, "checkpoint truncated");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.params.size() != ckpt.layout.param_count()) {
    fail(ErrorKind::kDimensionMismatch, "checkpoint parameter count does not match its layout");
  }
  std::string out("A3BX");
  put<std::uint32_t>(out, Checkpoint::kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.layout.stack_count()));
  for (int s = 0; s < ckpt.layout.stack_count(); ++s) {
    const auto& layers = ckpt.layout.stack(s);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(l.in));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(l.out));
      put<std::uint8_t>(out, static_cast<std::uint8_t>(l.act));
    }
  }
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ckpt.params.size()));
  out.append(reinterpret_cast<const char*>(ckpt.params.data()), ckpt.params.size() * sizeof(float));
  const std::string meta = ckpt.metadata.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  put<std::uint32_t>(out, crc_of(out.data(), out.size()));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "A3BX") != 0) {
    fail(ErrorKind::kFormat, "not an A3BX checkpoint");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + body, 4);
  if (stored_crc != crc_of(bytes.data(), body)) fail(ErrorKind::kFormat, "checkpoint CRC mismatch");

  Reader r(bytes, body);
  (void)r.get_bytes(4);
  const auto version = r.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    fail(ErrorKind::kFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto stacks = r.get<std::uint32_t>();
  for (std::uint32_t s = 0; s < stacks; ++s) {
    const auto count = r.get<std::uint32_t>();
    std::vector<nnet::LayerSpec> layers;
    for (std::uint32_t l = 0; l < count; ++l) {
      nnet::LayerSpec spec;
      spec.in = static_cast<int>(r.get<std::uint32_t>());
      spec.out = static_cast<int>(r.get<std::uint32_t>());
      const auto act = r.get<std::uint8_t>();
      if (act > 1) fail(ErrorKind::kFormat, "unknown activation code");
      spec.act = static_cast<nnet::Activation>(act);
      layers.push_back(spec);
    }
    ckpt.layout.add_stack(layers);
  }
  const auto n = r.get<std::uint64_t>();
  if (n != ckpt.layout.param_count()) fail(ErrorKind::kFormat, "parameter count does not match layer specs");
  const std::string raw = r.get_bytes(n * sizeof(float));
  ckpt.params.resize(n);
  std::memcpy(ckpt.params.data(), raw.data(), raw.size());
  const auto meta_len = r.get<std::uint32_t>();
  ckpt.metadata = nlohmann::json::parse(r.get_bytes(meta_len));
  if (r.pos() != body) fail(ErrorKind::kFormat, "trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_text_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::kMissingData, "no checkpoint at " + path.string());
  return deserialize_checkpoint(read_text_file(path));
}

}  // namespace asttrack
