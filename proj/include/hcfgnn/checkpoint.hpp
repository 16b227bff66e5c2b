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

// Named tensors as flat arrays behind a shape header:
//   u32 magic "HCCK" | u32 payload_bytes | u32 count |
//   count x (u32 name_len, name bytes, u32 rows, u32 cols, rows*cols x f64)

#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "hcfgnn/messages.hpp"

namespace hcfgnn {

using NamedTensor = std::pair<std::string, Table>;

inline constexpr std::uint32_t kCheckpointMagic = 0x4b434348;  // "HCCK"

inline Bytes encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  codec::Writer w(kCheckpointMagic);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.table(t);
  }
  return std::move(w).finish();
}

inline std::vector<NamedTensor> decode_checkpoint(const Bytes& b) {
  codec::Reader r(b, kCheckpointMagic);
  std::vector<NamedTensor> out;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    out.emplace_back(std::move(name), r.table());
  }
  r.done();
  return out;
}

inline std::vector<NamedTensor> params_to_tensors(const ModelParams& p, const std::string& prefix) {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < p.attn.size(); ++i) {
    out.emplace_back(prefix + std::to_string(i) + ".W", p.attn[i].W);
    out.emplace_back(prefix + std::to_string(i) + ".a", Table(p.attn[i].a.transpose()));
  }
  return out;
}

inline void write_bytes(const std::string& path, const Bytes& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline Bytes read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace hcfgnn
