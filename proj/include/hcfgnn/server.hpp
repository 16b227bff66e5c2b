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

// Coordinator: multi-head attention similarity over uploaded user embeddings,
// top-k neighbor selection, num_u-weighted gradient aggregation and downlinks.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hcfgnn/messages.hpp"
#include "hcfgnn/optim.hpp"
#include "hcfgnn/qos_data.hpp"

namespace hcfgnn {

// Per-head row-softmax of E_ij over j != i, averaged over heads. The diagonal
// is excluded from every row and left at 0.
inline Matrix similarity_matrix(const Table& users, std::span<const AttentionParams> heads) {
  const Eigen::Index n = users.rows();
  if (n < 2) throw ContractError("similarity_matrix needs at least 2 users");
  if (heads.empty()) throw ConfigError("similarity_matrix needs at least one head");
  Matrix out = Matrix::Zero(n, n);
  Vector row(n - 1);
  for (const auto& p : heads) {
    require_dim(users.cols(), p.in_dim(), "similarity head input");
    const Eigen::Index d_out = p.out_dim();
    const Vector center_terms = users * (p.W.transpose() * p.a.head(d_out));
    const Vector cand_terms = users * (p.W.transpose() * p.a.tail(d_out));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index k = 0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) row[k++] = leaky_relu(center_terms[i] + cand_terms[j], p.leaky_slope);
      const Vector alpha = stable_softmax(row);
      k = 0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) out(i, j) += alpha[k++];
    }
  }
  out /= static_cast<double>(heads.size());
  return out;
}

// Splits p's output dimension into h contiguous row blocks. Head t scores with
// W[block t] and the matching entries of both halves of a, so the heads'
// pre-activations sum to p's.
inline std::vector<AttentionParams> slice_heads(const AttentionParams& p, std::size_t h) {
  const auto d_out = static_cast<std::size_t>(p.out_dim());
  if (h < 1 || h > d_out) throw ConfigError("head count must lie in [1, out_dim] for sliced heads");
  std::vector<AttentionParams> out;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < h; ++t) {
    const std::size_t rows = d_out / h + (t < d_out % h ? 1 : 0);
    const auto b = static_cast<Eigen::Index>(begin), n = static_cast<Eigen::Index>(rows);
    AttentionParams head;
    head.W = p.W.middleRows(b, n);
    head.a.resize(2 * n);
    head.a << p.a.segment(b, n), p.a.segment(static_cast<Eigen::Index>(d_out) + b, n);
    head.leaky_slope = p.leaky_slope;
    out.push_back(std::move(head));
    begin += rows;
  }
  return out;
}

using NeighborAssignment = std::vector<std::vector<NeighborEntry>>;

// Descending score, ties by ascending user id.
inline bool neighbor_before(const NeighborEntry& a, const NeighborEntry& b) {
  return a.score != b.score ? a.score > b.score : a.user_id < b.user_id;
}

inline NeighborAssignment select_top_k(const Matrix& scores, std::size_t k, const Table& users) {
  const auto n = static_cast<std::size_t>(scores.rows());
  if (scores.cols() != scores.rows()) throw ShapeError("score matrix must be square");
  if (k >= n && n > 0) throw ContractError("k must be smaller than the user count");
  NeighborAssignment out(n);
  std::vector<NeighborEntry> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        cand.push_back({static_cast<std::uint32_t>(j), scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), {}});
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), neighbor_before);
    for (std::size_t r = 0; r < k; ++r) {
      cand[r].embedding = users.row(cand[r].user_id).transpose();
      out[i].push_back(std::move(cand[r]));
    }
  }
  return out;
}

// Neighbors for the `all` ablation: users sharing at least one train item,
// ranked by shared-item count, capped at k.
inline NeighborAssignment co_interaction_neighbors(const std::vector<std::vector<Interaction>>& train,
                                                   std::size_t n_items, std::size_t k, const Table& users) {
  const std::size_t n = train.size();
  std::vector<std::vector<std::uint32_t>> item_users(n_items);
  for (std::size_t u = 0; u < n; ++u)
    for (const auto& t : train[u]) item_users[t.item].push_back(static_cast<std::uint32_t>(u));
  NeighborAssignment out(n);
  std::vector<std::uint32_t> shared(n);
  for (std::size_t u = 0; u < n; ++u) {
    std::fill(shared.begin(), shared.end(), 0);
    for (const auto& t : train[u])
      for (auto v : item_users[t.item])
        if (v != u) ++shared[v];
    std::vector<NeighborEntry> cand;
    for (std::size_t v = 0; v < n; ++v)
      if (shared[v] > 0) cand.push_back({static_cast<std::uint32_t>(v), static_cast<double>(shared[v]), {}});
    std::sort(cand.begin(), cand.end(), neighbor_before);
    if (cand.size() > k) cand.resize(k);
    for (auto& c : cand) c.embedding = users.row(c.user_id).transpose();
    out[u] = std::move(cand);
  }
  return out;
}

// L = sum_u num_u * L_u^2
inline double global_loss(std::span<const UplinkMessage> messages) {
  double total = 0.0;
  for (const auto& m : messages) total += static_cast<double>(m.num_u) * m.local_loss * m.local_loss;
  return total;
}

enum class ItemAggregation {
  // Each item row is averaged over the clients that uploaded it, weights num_u.
  kPerRow,
  // Every gradient is weighted by num_u / sum num_u over all participants.
  kGlobal,
};

enum class SimilarityHeads {
  // h independently seeded parameter sets held by the server.
  kFixed,
  // h row slices of the trained neighbor-path attention parameters.
  kSlices,
};

struct ServerConfig {
  OptimizerConfig optimizer;
  std::size_t k = 5;
  ItemAggregation item_aggregation = ItemAggregation::kPerRow;
  SimilarityHeads similarity_heads = SimilarityHeads::kFixed;
};

struct AggregateResult {
  double global_loss = 0.0;
  std::uint64_t total_weight = 0;
  bool noop = false;  // every participant had num_u == 0
};

class Coordinator {
 public:
  Coordinator(Table users, Table items, ModelParams params, std::vector<AttentionParams> heads, ServerConfig cfg)
      : users_(std::move(users)), items_(std::move(items)), params_(std::move(params)), heads_(std::move(heads)),
        cfg_(cfg) {
    item_opt_ = TableOptimizer(items_.rows(), items_.cols(), cfg_.optimizer);
    for (const auto& p : params_.attn) {
      w_opt_.emplace_back(p.W.rows(), p.W.cols(), cfg_.optimizer);
      a_opt_.emplace_back(p.a.size(), cfg_.optimizer);
    }
    if (heads_.empty()) throw ConfigError("head_count must be at least 1");
    if (users_.rows() > 0 && cfg_.k >= static_cast<std::size_t>(users_.rows()))
      throw ConfigError("k must be smaller than the user count");
  }

  const Table& users() const { return users_; }
  const Table& items() const { return items_; }
  const ModelParams& params() const { return params_; }
  const std::vector<AttentionParams>& heads() const { return heads_; }
  std::vector<AttentionParams> similarity_heads() const {
    if (cfg_.similarity_heads == SimilarityHeads::kSlices)
      return slice_heads(params_.at(AttentionPath::kNeighbor), heads_.size());
    return heads_;
  }
  std::uint32_t round() const { return round_; }
  const ServerConfig& config() const { return cfg_; }

  void set_user(std::uint32_t user, const Vector& embedding) { users_.row(user) = embedding.transpose(); }
  void next_round() { ++round_; }

  GlobalSnapshot snapshot() const { return {round_, items_, params_}; }

  NeighborAssignment select_neighbors() const {
    if (cfg_.k == 0) return NeighborAssignment(static_cast<std::size_t>(users_.rows()));
    return select_top_k(similarity_matrix(users_, similarity_heads()), cfg_.k, users_);
  }

  std::vector<DownlinkMessage> broadcast(const NeighborAssignment& assignment,
                                         std::span<const std::uint32_t> recipients) const {
    std::vector<DownlinkMessage> out;
    out.reserve(recipients.size());
    for (auto u : recipients) out.push_back({u, round_, assignment.at(u)});
    return out;
  }

  AggregateResult aggregate_round(std::span<const UplinkMessage> messages) {
    AggregateResult res;
    res.global_loss = global_loss(messages);
    for (const auto& m : messages) res.total_weight += m.num_u;
    if (res.total_weight == 0) {
      res.noop = true;
      return res;
    }
    const double total = static_cast<double>(res.total_weight);

    std::vector<AttentionGrad> attn;
    for (const auto& p : params_.attn) attn.push_back(AttentionGrad::zeros_like(p));
    Table item_sum = Table::Zero(items_.rows(), items_.cols());
    Vector item_weight = Vector::Zero(items_.rows());
    for (const auto& m : messages) {
      if (m.num_u == 0) continue;
      const double w = static_cast<double>(m.num_u) / total;
      if (m.attn_grads.size() != attn.size()) throw ShapeError("uplink attention gradient count mismatch");
      for (std::size_t i = 0; i < attn.size(); ++i) {
        require_dim(m.attn_grads[i].dW.size(), attn[i].dW.size(), "uplink dW");
        require_dim(m.attn_grads[i].da.size(), attn[i].da.size(), "uplink da");
        attn[i].dW += w * m.attn_grads[i].dW;
        attn[i].da += w * m.attn_grads[i].da;
      }
      for (std::size_t r = 0; r < m.item_ids.size(); ++r) {
        const auto id = m.item_ids[r];
        if (id >= items_.rows()) throw ShapeError("uplink item id outside catalog");
        item_sum.row(id) += w * m.item_grads.row(static_cast<Eigen::Index>(r));
        item_weight[id] += w;
      }
    }
    for (std::size_t i = 0; i < attn.size(); ++i) {
      require_finite(attn[i].dW, "aggregated attention W gradient");
      require_finite(attn[i].da, "aggregated attention a gradient");
      auto& p = params_.attn[i];
      w_opt_[i].step(p.W, attn[i].dW);
      a_opt_[i].step(p.a, attn[i].da);
    }
    for (Eigen::Index id = 0; id < items_.rows(); ++id) {
      if (item_weight[id] == 0.0) continue;
      const double norm = cfg_.item_aggregation == ItemAggregation::kPerRow ? item_weight[id] : 1.0;
      item_opt_.step_row(id, items_.row(id), (item_sum.row(id) / norm).eval());
    }
    require_finite(items_, "item embedding table");
    for (const auto& m : messages) set_user(m.user_id, m.user_embedding);
    return res;
  }

 private:
  Table users_;
  Table items_;
  ModelParams params_;
  std::vector<AttentionParams> heads_;
  ServerConfig cfg_;
  TableOptimizer item_opt_;
  std::vector<TableOptimizer> w_opt_;
  std::vector<VectorOptimizer> a_opt_;
  std::uint32_t round_ = 0;
};

}  // namespace hcfgnn
