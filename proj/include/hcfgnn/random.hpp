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

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "hcfgnn/tensor.hpp"

namespace hcfgnn {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream tags keep per-purpose streams apart; a stream depends only on
// (master, tag, index...) so adding clients never shifts another client's draws.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kClientInit = 2,
  kClientRound = 3,
  kItemInit = 4,
  kAttentionInit = 5,
  kHeadInit = 6,
  kSchedule = 7,
  kSynthetic = 8,
  kCheck = 9,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream tag,
                                 std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t s = mix64(master ^ mix64(static_cast<std::uint64_t>(tag)));
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t master, Stream tag, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(master, tag, path));
}

// Uniform on the open interval (0, 1) built from 53 random bits.
inline double uniform_open(Rng& rng) {
  for (;;) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

// Laplace(0, scale) by inverse CDF. scale == 0 yields exactly 0.
inline double sample_laplace(Rng& rng, double scale) {
  if (scale == 0.0) return 0.0;
  const double u = uniform_open(rng) - 0.5;
  const double mag = -std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -scale * mag : scale * mag;
}

// Box-Muller so that draws do not depend on the standard library's
// normal_distribution implementation.
inline double sample_normal(Rng& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename Derived>
void fill_normal(Eigen::DenseBase<Derived>& x, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = stddev * sample_normal(rng);
}

// Uniform integer in [0, n) without modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % n;
  }
}

// Fisher-Yates with uniform_index; std::shuffle's draw pattern is unspecified.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = uniform_index(rng, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace hcfgnn
