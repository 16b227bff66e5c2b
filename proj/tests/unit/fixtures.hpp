// Copyright 2026 The hcfgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <filesystem>
#include <string>

#include "hcfgnn/hcfgnn.hpp"

namespace hcfgnn::testing {

// A small dense-ish surrogate so full rounds finish in milliseconds.
inline ExperimentConfig tiny_config(std::size_t users = 24, std::size_t items = 60) {
  ExperimentConfig c;
  c.dataset.path = "synthetic:rt";
  c.dataset.split = "RT4";
  c.dataset.synthetic_users = users;
  c.dataset.synthetic_items = items;
  c.dataset.synthetic_observed = users * items * 9 / 10;
  c.dim = 6;
  c.k = 3;
  c.batch = 8;
  c.head_count = 2;
  c.schedule.total_rounds = 4;
  c.schedule.patience = 0;
  c.seed = 7;
  return c;
}

inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hcfgnn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline std::string slurp(const std::string& path) {
  const Bytes b = read_bytes(path);
  return std::string(b.begin(), b.end());
}

}  // namespace hcfgnn::testing
