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

// Local differential privacy for uploads: pseudo-item obfuscation, elementwise
// clipping, and Laplace noise whose scale tracks the clipped gradient magnitude.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hcfgnn/model.hpp"
#include "hcfgnn/random.hpp"

namespace hcfgnn {

enum class NoiseScaleMode {
  kMeanAbs,     // b = lambda * mean(|clip(g)|)
  kSignedMean,  // b = lambda * |mean(clip(g))|
};

struct LdpConfig {
  double delta = 0.5;
  double lambda = 0.1;
  std::size_t pseudo_count = 2;
  NoiseScaleMode scale_mode = NoiseScaleMode::kMeanAbs;
  // Adds Laplace noise to the uploaded user-embedding value as well.
  bool perturb_user_embedding = false;

  void validate() const {
    if (!(delta > 0.0)) throw ConfigError("ldp.delta must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("ldp.lambda must be finite and >= 0");
  }
};

template <typename Derived>
double noise_scale(const Eigen::DenseBase<Derived>& clipped, double lambda, NoiseScaleMode mode) {
  if (clipped.size() == 0 || lambda == 0.0) return 0.0;
  const double n = static_cast<double>(clipped.size());
  const double m = mode == NoiseScaleMode::kMeanAbs ? clipped.derived().cwiseAbs().sum() / n
                                                    : std::abs(clipped.derived().sum() / n);
  return lambda * m;
}

// In-place clip to [-delta, delta] then Laplace(0, b) per entry. Returns b.
template <typename Derived>
double clip_and_noise(Eigen::DenseBase<Derived>& x, const LdpConfig& cfg, Rng& rng) {
  if (std::isfinite(cfg.delta)) x = x.derived().cwiseMax(-cfg.delta).cwiseMin(cfg.delta);
  const double b = noise_scale(x, cfg.lambda, cfg.scale_mode);
  if (b > 0.0) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += sample_laplace(rng, b);
  }
  return b;
}

// Perturbs every uploaded tensor independently: the item-gradient block (real and
// pseudo rows together), each dW, each da. d_user is never uploaded and is left as is.
inline GradientBundle perturb(GradientBundle g, const LdpConfig& cfg, Rng& rng) {
  cfg.validate();
  clip_and_noise(g.d_item, cfg, rng);
  for (auto& a : g.d_attn) {
    clip_and_noise(a.dW, cfg, rng);
    clip_and_noise(a.da, cfg, rng);
  }
  return g;
}

// Value perturbation for the uploaded user embedding (no clipping).
inline Vector perturb_value(Vector v, const LdpConfig& cfg, Rng& rng) {
  const double b = noise_scale(v, cfg.lambda, cfg.scale_mode);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += sample_laplace(rng, b);
  return v;
}

struct ObfuscationResult {
  GradientBundle grads;
  std::vector<std::uint32_t> pseudo_ids;
  bool pool_exhausted = false;  // the user interacted with the whole catalog
};

// Attaches pseudo_count zero-signal rows per real item row, sampled without
// replacement from items the user never interacted with. Rows come back sorted
// by item id so row order carries no hint of which rows are real.
inline ObfuscationResult obfuscate(GradientBundle g, std::span<const std::uint32_t> interacted,
                                   std::size_t n_items, const LdpConfig& cfg, Rng& rng) {
  ObfuscationResult out;
  const std::size_t want = cfg.pseudo_count * g.item_ids.size();
  if (want == 0) {
    out.grads = std::move(g);
    return out;
  }
  std::vector<std::uint8_t> taken(n_items, 0);
  for (auto i : interacted) {
    if (i >= n_items) throw ShapeError("interacted item outside catalog");
    taken[i] = 1;
  }
  for (auto i : g.item_ids) taken[i] = 1;
  std::vector<std::uint32_t> pool;
  pool.reserve(n_items);
  for (std::uint32_t i = 0; i < n_items; ++i)
    if (!taken[i]) pool.push_back(i);
  if (pool.empty()) {
    out.pool_exhausted = true;
    out.grads = std::move(g);
    return out;
  }
  const std::size_t n = std::min(want, pool.size());
  // Partial Fisher-Yates: first n slots become a uniform sample.
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k + uniform_index(rng, pool.size() - k);
    std::swap(pool[k], pool[j]);
  }
  out.pseudo_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));

  const Eigen::Index dim = g.d_item.cols();
  std::vector<std::pair<std::uint32_t, Eigen::Index>> order;  // (item id, source row or -1)
  for (std::size_t r = 0; r < g.item_ids.size(); ++r) order.emplace_back(g.item_ids[r], static_cast<Eigen::Index>(r));
  for (auto id : out.pseudo_ids) order.emplace_back(id, -1);
  std::sort(order.begin(), order.end());

  Table rows = Table::Zero(static_cast<Eigen::Index>(order.size()), dim);
  std::vector<std::uint32_t> ids(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    ids[r] = order[r].first;
    if (order[r].second >= 0) rows.row(static_cast<Eigen::Index>(r)) = g.d_item.row(order[r].second);
  }
  g.item_ids = std::move(ids);
  g.d_item = std::move(rows);
  out.grads = std::move(g);
  return out;
}

}  // namespace hcfgnn
