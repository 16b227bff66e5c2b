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

// Wire messages between clients and the coordinator, and their binary codec.
//
// Frame layout (all integers little-endian, doubles as IEEE-754 bit patterns):
//   u32 magic | u32 payload_bytes | payload
// Payload building blocks:
//   vector := u32 n, n x f64
//   table  := u32 rows, u32 cols, rows*cols x f64 (row-major)
//   ids    := u32 n, n x u32
//   attn   := table W, vector a, f64 leaky_slope      (snapshot only)
//   grad   := table dW, vector da
// Uplink   (magic "HCUP"): u32 user, u32 round, u64 num_u, f64 local_loss,
//                          vector user_embedding, ids item_ids, table item_grads,
//                          u32 n_grads, n x grad
// Downlink (magic "HCDN"): u32 user, u32 round, u32 n, n x (u32 id, f64 score, vector embedding)
// Snapshot (magic "HCGS"): u32 round, table items, u32 n_attn, n x attn

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "hcfgnn/model.hpp"

namespace hcfgnn {

using Bytes = std::vector<std::uint8_t>;

struct UplinkMessage {
  std::uint32_t user_id = 0;
  std::uint32_t round = 0;
  std::uint64_t num_u = 0;
  double local_loss = 0.0;
  Vector user_embedding;
  std::vector<std::uint32_t> item_ids;
  Table item_grads;
  std::vector<AttentionGrad> attn_grads;
};

struct NeighborEntry {
  std::uint32_t user_id = 0;
  double score = 0.0;
  Vector embedding;
};

struct DownlinkMessage {
  std::uint32_t user_id = 0;
  std::uint32_t round = 0;
  std::vector<NeighborEntry> neighbors;
};

// Global state shipped to every client of an aggregation step.
struct GlobalSnapshot {
  std::uint32_t round = 0;
  Table items;
  ModelParams params;
};

namespace codec {

inline constexpr std::uint32_t kUplinkMagic = 0x50554348;    // "HCUP"
inline constexpr std::uint32_t kDownlinkMagic = 0x4e444348;  // "HCDN"
inline constexpr std::uint32_t kSnapshotMagic = 0x53474348;  // "HCGS"

class Writer {
 public:
  explicit Writer(std::uint32_t magic) {
    u32(magic);
    u32(0);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void doubles(const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      const std::size_t at = buf_.size();
      buf_.resize(at + n * 8);
      if (n > 0) std::memcpy(buf_.data() + at, p, n * 8);
    } else {
      for (std::size_t i = 0; i < n; ++i) f64(p[i]);
    }
  }
  void vec(const Vector& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    doubles(v.data(), static_cast<std::size_t>(v.size()));
  }
  void table(const Table& t) {
    u32(static_cast<std::uint32_t>(t.rows()));
    u32(static_cast<std::uint32_t>(t.cols()));
    doubles(t.data(), static_cast<std::size_t>(t.size()));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void ids(const std::vector<std::uint32_t>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (auto x : v) u32(x);
  }
  Bytes finish() && {
    const auto n = static_cast<std::uint32_t>(buf_.size() - 8);
    for (int i = 0; i < 4; ++i) buf_[4 + i] = static_cast<std::uint8_t>(n >> (8 * i));
    return std::move(buf_);
  }

 private:
  Bytes buf_;
};

class Reader {
 public:
  Reader(const Bytes& b, std::uint32_t magic) : b_(b) {
    if (u32() != magic) throw CodecError("bad message magic");
    if (u32() != b_.size() - 8) throw CodecError("payload length mismatch");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void doubles(double* p, std::size_t n) {
    need(n * 8);
    if constexpr (std::endian::native == std::endian::little) {
      if (n > 0) std::memcpy(p, b_.data() + pos_, n * 8);
      pos_ += n * 8;
    } else {
      for (std::size_t i = 0; i < n; ++i) p[i] = f64();
    }
  }
  Vector vec() {
    const std::uint32_t n = u32();
    need(std::size_t{n} * 8);
    Vector v(n);
    doubles(v.data(), n);
    return v;
  }
  Table table() {
    const std::uint32_t r = u32();
    const std::uint32_t c = u32();
    need(std::size_t{r} * c * 8);
    Table t(r, c);
    doubles(t.data(), std::size_t{r} * c);
    return t;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::vector<std::uint32_t> ids() {
    const std::uint32_t n = u32();
    need(std::size_t{n} * 4);
    std::vector<std::uint32_t> v(n);
    for (auto& x : v) x = u32();
    return v;
  }
  void done() const {
    if (pos_ != b_.size()) throw CodecError("trailing bytes after message");
  }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CodecError("truncated message");
  }
  const Bytes& b_;
  std::size_t pos_ = 0;
};

}  // namespace codec

inline Bytes encode(const UplinkMessage& m) {
  codec::Writer w(codec::kUplinkMagic);
  w.u32(m.user_id);
  w.u32(m.round);
  w.u64(m.num_u);
  w.f64(m.local_loss);
  w.vec(m.user_embedding);
  w.ids(m.item_ids);
  w.table(m.item_grads);
  w.u32(static_cast<std::uint32_t>(m.attn_grads.size()));
  for (const auto& g : m.attn_grads) {
    w.table(g.dW);
    w.vec(g.da);
  }
  return std::move(w).finish();
}

inline UplinkMessage decode_uplink(const Bytes& b) {
  codec::Reader r(b, codec::kUplinkMagic);
  UplinkMessage m;
  m.user_id = r.u32();
  m.round = r.u32();
  m.num_u = r.u64();
  m.local_loss = r.f64();
  m.user_embedding = r.vec();
  m.item_ids = r.ids();
  m.item_grads = r.table();
  if (m.item_grads.rows() != static_cast<Eigen::Index>(m.item_ids.size()))
    throw CodecError("item gradient rows do not match item ids");
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    AttentionGrad g;
    g.dW = r.table();
    g.da = r.vec();
    m.attn_grads.push_back(std::move(g));
  }
  r.done();
  return m;
}

inline Bytes encode(const DownlinkMessage& m) {
  codec::Writer w(codec::kDownlinkMagic);
  w.u32(m.user_id);
  w.u32(m.round);
  w.u32(static_cast<std::uint32_t>(m.neighbors.size()));
  for (const auto& n : m.neighbors) {
    w.u32(n.user_id);
    w.f64(n.score);
    w.vec(n.embedding);
  }
  return std::move(w).finish();
}

inline DownlinkMessage decode_downlink(const Bytes& b) {
  codec::Reader r(b, codec::kDownlinkMagic);
  DownlinkMessage m;
  m.user_id = r.u32();
  m.round = r.u32();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    NeighborEntry e;
    e.user_id = r.u32();
    e.score = r.f64();
    e.embedding = r.vec();
    m.neighbors.push_back(std::move(e));
  }
  r.done();
  return m;
}

inline Bytes encode(const GlobalSnapshot& s) {
  codec::Writer w(codec::kSnapshotMagic);
  w.u32(s.round);
  w.table(s.items);
  w.u32(static_cast<std::uint32_t>(s.params.attn.size()));
  for (const auto& p : s.params.attn) {
    w.table(p.W);
    w.vec(p.a);
    w.f64(p.leaky_slope);
  }
  return std::move(w).finish();
}

inline GlobalSnapshot decode_snapshot(const Bytes& b) {
  codec::Reader r(b, codec::kSnapshotMagic);
  GlobalSnapshot s;
  s.round = r.u32();
  s.items = r.table();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    AttentionParams p;
    p.W = r.table();
    p.a = r.vec();
    p.leaky_slope = r.f64();
    s.params.attn.push_back(std::move(p));
  }
  r.done();
  return s;
}

}  // namespace hcfgnn
