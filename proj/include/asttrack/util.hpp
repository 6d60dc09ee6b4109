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
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace asttrack {

// Derives an independent 64-bit seed for a named random substream. All
// randomness in a run flows from one master seed through this function.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index = 0);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::string_view stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

// Shortest decimal that round-trips a double (17 significant digits).
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Minimal CSV reader for the numeric files this project writes: one header
// line, comma separated, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Exceptions are
// rethrown on the calling thread (the lowest failing index wins).
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace asttrack
