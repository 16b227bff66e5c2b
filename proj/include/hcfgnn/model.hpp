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

// The per-user model: item and neighbor aggregation, the three-way mix that
// forms the personal embedding, inner-product prediction, RMSE loss, and the
// analytic backward pass through all of it.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcfgnn/attention.hpp"
#include "hcfgnn/metrics.hpp"

namespace hcfgnn {

enum class AttentionPath : std::size_t { kNeighbor = 0, kItem = 1, kMix = 2 };

// One shared AttentionParams, or one per path when separate_paths is set.
struct ModelParams {
  std::vector<AttentionParams> attn;

  std::size_t index(AttentionPath path) const { return attn.size() == 1 ? 0 : static_cast<std::size_t>(path); }
  const AttentionParams& at(AttentionPath path) const { return attn[index(path)]; }

  static ModelParams init(Eigen::Index dim, bool separate_paths, Rng& rng, double stddev, double slope = 0.2) {
    ModelParams m;
    const int n = separate_paths ? 3 : 1;
    for (int i = 0; i < n; ++i) m.attn.push_back(AttentionParams::random(dim, dim, rng, stddev, slope));
    return m;
  }
};

struct GradientBundle {
  Vector d_user;
  std::vector<std::uint32_t> item_ids;
  Table d_item;  // rows aligned with item_ids
  std::vector<AttentionGrad> d_attn;
  std::size_t sample_count = 0;

  static GradientBundle zeros(Eigen::Index dim, std::vector<std::uint32_t> items, const ModelParams& params) {
    GradientBundle g;
    g.d_user = Vector::Zero(dim);
    g.d_item = Table::Zero(static_cast<Eigen::Index>(items.size()), dim);
    g.item_ids = std::move(items);
    for (const auto& p : params.attn) g.d_attn.push_back(AttentionGrad::zeros_like(p));
    return g;
  }

  void check_finite() const {
    require_finite(d_user, "user embedding gradient");
    require_finite(d_item, "item embedding gradient");
    for (std::size_t i = 0; i < d_attn.size(); ++i) {
      require_finite(d_attn[i].dW, "attention W gradient [" + std::to_string(i) + "]");
      require_finite(d_attn[i].da, "attention a gradient [" + std::to_string(i) + "]");
    }
  }
};

// e'_u = theta_u e_u + theta_i A_ui + theta_n A_un.
inline Vector update_user_embedding(const Vector& user, const Vector& item_agg, const Vector& neighbor_agg,
                                    const std::array<double, 3>& weights) {
  require_dim(item_agg.size(), user.size(), "item aggregate");
  require_dim(neighbor_agg.size(), user.size(), "neighbor aggregate");
  const double total = weights[0] + weights[1] + weights[2];
  if (std::abs(total - 1.0) > 1e-6) throw ContractError("mixing weights must sum to 1");
  return weights[0] * user + weights[1] * item_agg + weights[2] * neighbor_agg;
}

inline double predict(const Vector& personal, const Vector& item) {
  require_dim(item.size(), personal.size(), "predict");
  return personal.dot(item);
}

// RMSE over (prediction, actual) pairs; shares the evaluation metric.
inline double local_loss(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw UndefinedError("local loss over an empty batch");
  return rmse(pairs);
}

struct Target {
  std::size_t local_item = 0;  // row of LocalBatch::items
  double value = 0.0;
};

struct LocalBatch {
  Vector user;
  std::vector<std::uint32_t> item_ids;  // the user's item graph
  Table items;                          // rows aligned with item_ids
  Table neighbors;                      // server-provided constants; zero rows when absent
  std::vector<Target> targets;
};

struct ForwardResult {
  std::optional<AttentionScores> item_scores;
  std::optional<AttentionScores> neighbor_scores;
  Vector item_agg;
  Vector neighbor_agg;
  Table mix_candidates;  // rows: self, then item aggregate and neighbor aggregate when present
  int item_row = -1;
  int neighbor_row = -1;
  AttentionScores mix_scores;
  Vector personal;
  Vector predictions;
  double loss = 0.0;
};

// Builds e'_u. Missing channels (no items, no neighbors) drop out of the mix
// and the softmax renormalizes over what remains.
inline ForwardResult personal_embedding(const LocalBatch& b, const ModelParams& params) {
  const Eigen::Index dim = b.user.size();
  ForwardResult f;
  f.item_agg = Vector::Zero(dim);
  f.neighbor_agg = Vector::Zero(dim);
  if (b.items.rows() > 0) {
    const auto& p = params.at(AttentionPath::kItem);
    f.item_scores = attention_scores(b.user, b.items, p);
    f.item_agg = aggregate(*f.item_scores, b.items, p);
  }
  if (b.neighbors.rows() > 0) {
    const auto& p = params.at(AttentionPath::kNeighbor);
    f.neighbor_scores = attention_scores(b.user, b.neighbors, p);
    f.neighbor_agg = aggregate(*f.neighbor_scores, b.neighbors, p);
  }
  const int rows = 1 + (f.item_scores ? 1 : 0) + (f.neighbor_scores ? 1 : 0);
  f.mix_candidates.resize(rows, dim);
  f.mix_candidates.row(0) = b.user.transpose();
  int r = 1;
  if (f.item_scores) {
    f.item_row = r;
    f.mix_candidates.row(r++) = f.item_agg.transpose();
  }
  if (f.neighbor_scores) {
    f.neighbor_row = r;
    f.mix_candidates.row(r++) = f.neighbor_agg.transpose();
  }
  const auto& mix = params.at(AttentionPath::kMix);
  if (mix.out_dim() != dim) throw ShapeError("mixing attention requires out_dim == embedding dim");
  f.mix_scores = attention_scores(b.user, f.mix_candidates, mix);
  const std::array<double, 3> theta{f.mix_scores.normalized[0],
                                    f.item_row >= 0 ? f.mix_scores.normalized[f.item_row] : 0.0,
                                    f.neighbor_row >= 0 ? f.mix_scores.normalized[f.neighbor_row] : 0.0};
  f.personal = update_user_embedding(b.user, f.item_agg, f.neighbor_agg, theta);
  return f;
}

inline ForwardResult forward(const LocalBatch& b, const ModelParams& params) {
  if (b.targets.empty()) throw UndefinedError("forward: batch has no targets");
  ForwardResult f = personal_embedding(b, params);
  f.predictions.resize(static_cast<Eigen::Index>(b.targets.size()));
  std::vector<ScoredPair> pairs;
  pairs.reserve(b.targets.size());
  for (std::size_t t = 0; t < b.targets.size(); ++t) {
    const auto& tg = b.targets[t];
    if (tg.local_item >= static_cast<std::size_t>(b.items.rows())) throw ShapeError("target item out of range");
    const double p = predict(f.personal, b.items.row(static_cast<Eigen::Index>(tg.local_item)).transpose());
    f.predictions[static_cast<Eigen::Index>(t)] = p;
    pairs.push_back({p, tg.value});
  }
  f.loss = local_loss(pairs);
  return f;
}

// Analytic dL/d{e_u, e_items, W, a}. Neighbor embeddings are constants.
inline GradientBundle backward(const LocalBatch& b, const ModelParams& params, const ForwardResult& f) {
  const Eigen::Index dim = b.user.size();
  GradientBundle g = GradientBundle::zeros(dim, b.item_ids, params);
  const auto m = static_cast<double>(b.targets.size());
  g.sample_count = b.targets.size();
  if (f.loss == 0.0) return g;

  // dL/d personal
  Vector d_personal = Vector::Zero(dim);
  for (std::size_t t = 0; t < b.targets.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(b.targets[t].local_item);
    const double d_pred = (f.predictions[static_cast<Eigen::Index>(t)] - b.targets[t].value) / (m * f.loss);
    d_personal.noalias() += d_pred * b.items.row(row).transpose();
    g.d_item.row(row).noalias() += d_pred * f.personal.transpose();
  }

  // Mix: personal = sum_c theta_c v_c.
  const Vector& theta = f.mix_scores.normalized;
  const Vector d_theta = f.mix_candidates * d_personal;
  Table d_mix = theta * d_personal.transpose();
  const auto& mix = params.at(AttentionPath::kMix);
  attention_backward(b.user, f.mix_candidates, mix, f.mix_scores, d_theta, g.d_user, &d_mix,
                     g.d_attn[params.index(AttentionPath::kMix)]);
  g.d_user += d_mix.row(0).transpose();

  Vector d_alpha;
  if (f.item_scores) {
    const auto& p = params.at(AttentionPath::kItem);
    auto& grad = g.d_attn[params.index(AttentionPath::kItem)];
    const Vector d_agg = d_mix.row(f.item_row).transpose();
    aggregate_backward(*f.item_scores, b.items, p, d_agg, d_alpha, &g.d_item, grad);
    attention_backward(b.user, b.items, p, *f.item_scores, d_alpha, g.d_user, &g.d_item, grad);
  }
  if (f.neighbor_scores) {
    const auto& p = params.at(AttentionPath::kNeighbor);
    auto& grad = g.d_attn[params.index(AttentionPath::kNeighbor)];
    const Vector d_agg = d_mix.row(f.neighbor_row).transpose();
    aggregate_backward(*f.neighbor_scores, b.neighbors, p, d_agg, d_alpha, nullptr, grad);
    attention_backward(b.user, b.neighbors, p, *f.neighbor_scores, d_alpha, g.d_user, nullptr, grad);
  }
  g.check_finite();
  return g;
}

}  // namespace hcfgnn
