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

// WSDREAM-shaped surrogate matrices for environments without the real files.
// Values come from a log-linear model with location groups (users and services
// grouped like WSDREAM's countries), per-entity biases, a low-rank interaction
// and noise. They reproduce shape and sparsity only; they are not WSDREAM data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hcfgnn/qos_data.hpp"

namespace hcfgnn {

enum class SyntheticKind { kResponseTime, kThroughput };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kResponseTime;
  std::size_t n_users = 339;
  std::size_t n_items = 5825;
  std::size_t observed = 1873838;  // WSDREAM RT count; TP has 1831253
  std::uint64_t seed = 1;

  static SyntheticSpec wsdream(SyntheticKind kind, std::uint64_t seed = 1) {
    SyntheticSpec s;
    s.kind = kind;
    s.observed = kind == SyntheticKind::kResponseTime ? 1873838 : 1831253;
    s.seed = seed;
    return s;
  }
};

inline QosMatrix generate_synthetic(const SyntheticSpec& spec) {
  const std::size_t n_cells = spec.n_users * spec.n_items;
  if (spec.observed > n_cells || spec.observed == 0) throw ConfigError("synthetic: bad observed count");
  const bool rt = spec.kind == SyntheticKind::kResponseTime;
  Rng rng = make_rng(spec.seed, Stream::kSynthetic, {rt ? 1ULL : 2ULL});

  constexpr int kRank = 6;
  const std::size_t user_groups = 30;
  const std::size_t item_groups = 73;
  const double mu = rt ? -1.25 : -0.8;
  const double user_bias_sd = rt ? 0.55 : 0.5;
  const double item_bias_sd = rt ? 0.8 : 0.6;
  const double interaction_scale = rt ? 1.0 : 0.75;
  const double noise_sd = rt ? 0.35 : 0.3;
  const double cap = rt ? 19.999 : 30.0;

  auto latent = [&](std::size_t count, std::size_t groups, double spread, std::vector<std::size_t>& group_of) {
    Table centers(static_cast<Eigen::Index>(groups), kRank);
    fill_normal(centers, rng, 1.0);
    Table out(static_cast<Eigen::Index>(count), kRank);
    group_of.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      // Skewed group sizes: a few large regions, many small ones.
      const double u = uniform_open(rng);
      group_of[i] = std::min(groups - 1, static_cast<std::size_t>(static_cast<double>(groups) * u * u));
      for (int r = 0; r < kRank; ++r)
        out(static_cast<Eigen::Index>(i), r) = centers(static_cast<Eigen::Index>(group_of[i]), r) + spread * sample_normal(rng);
    }
    return out;
  };
  std::vector<std::size_t> ug, ig;
  const Table U = latent(spec.n_users, user_groups, 0.5, ug);
  const Table V = latent(spec.n_items, item_groups, 0.5, ig);
  Vector bu(static_cast<Eigen::Index>(spec.n_users)), bi(static_cast<Eigen::Index>(spec.n_items));
  fill_normal(bu, rng, user_bias_sd);
  fill_normal(bi, rng, item_bias_sd);

  std::vector<double> values(n_cells);
  const double inv_sqrt_rank = 1.0 / std::sqrt(static_cast<double>(kRank));
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    for (std::size_t i = 0; i < spec.n_items; ++i) {
      const double dot = U.row(static_cast<Eigen::Index>(u)).dot(V.row(static_cast<Eigen::Index>(i)));
      const double logv = mu + bu[static_cast<Eigen::Index>(u)] + bi[static_cast<Eigen::Index>(i)] +
                          interaction_scale * dot * inv_sqrt_rank + noise_sd * sample_normal(rng);
      const double v = std::clamp(std::exp(logv), 0.001, cap);
      values[u * spec.n_items + i] = std::round(v * 1000.0) / 1000.0;
    }
  }
  // Mark a uniform random subset as failed invocations.
  std::vector<std::size_t> cells(n_cells);
  for (std::size_t k = 0; k < n_cells; ++k) cells[k] = k;
  const std::size_t missing = n_cells - spec.observed;
  for (std::size_t k = 0; k < missing; ++k) {
    std::swap(cells[k], cells[k + uniform_index(rng, n_cells - k)]);
    values[cells[k]] = kDefaultMissingMark;
  }
  return QosMatrix(spec.n_users, spec.n_items, std::move(values));
}

}  // namespace hcfgnn
