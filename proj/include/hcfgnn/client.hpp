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

// One user's side of the protocol. A ClientNode owns its private train triples
// and personal embedding; everything it learns about other users arrives as
// decoded downlink messages.

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "hcfgnn/ldp.hpp"
#include "hcfgnn/messages.hpp"
#include "hcfgnn/optim.hpp"
#include "hcfgnn/qos_data.hpp"

namespace hcfgnn {

struct ClientConfig {
  OptimizerConfig optimizer;
  std::size_t local_steps = 1;
  std::size_t local_batch = 0;  // 0: every train triple
  std::size_t max_neighbors = 5;
  LdpConfig ldp;
};

struct LocalStepResult {
  bool skipped = false;  // empty train set; loss undefined
  double loss = 0.0;
  GradientBundle grads;
};

class ClientNode {
 public:
  ClientNode(std::uint32_t user_id, std::vector<Interaction> train, std::size_t n_items, Vector embedding,
             std::uint64_t seed)
      : user_id_(user_id), n_items_(n_items), train_(std::move(train)), embedding_(std::move(embedding)),
        rng_(seed) {
    opt_ = VectorOptimizer(embedding_.size(), OptimizerConfig{});
    item_ids_.reserve(train_.size());
    for (const auto& t : train_) {
      if (t.user != user_id_) throw ContractError("train triple belongs to another user");
      item_ids_.push_back(t.item);
    }
  }

  std::uint32_t user_id() const { return user_id_; }
  std::size_t num_train() const { return train_.size(); }
  const Vector& embedding() const { return embedding_; }
  const std::vector<NeighborEntry>& neighbors() const { return neighbors_; }
  const std::vector<std::uint32_t>& interacted_items() const { return item_ids_; }
  Rng& rng() { return rng_; }

  void receive(const DownlinkMessage& m, std::size_t max_neighbors) {
    if (m.user_id != user_id_) throw ContractError("downlink addressed to another client");
    if (m.neighbors.size() > max_neighbors) throw ContractError("downlink carries more than k neighbors");
    for (const auto& n : m.neighbors)
      if (n.user_id == user_id_) throw ContractError("client listed as its own neighbor");
    neighbors_ = m.neighbors;
  }

  void receive(std::shared_ptr<const GlobalSnapshot> snapshot) { snapshot_ = std::move(snapshot); }

  // The model input for this client over the current snapshot and neighbor cache.
  LocalBatch make_batch() const {
    if (!snapshot_) throw ContractError("client has no global snapshot");
    const Table& items = snapshot_->items;
    LocalBatch b;
    b.user = embedding_;
    b.item_ids = item_ids_;
    b.items.resize(static_cast<Eigen::Index>(item_ids_.size()), items.cols());
    for (std::size_t r = 0; r < item_ids_.size(); ++r)
      b.items.row(static_cast<Eigen::Index>(r)) = items.row(item_ids_[r]);
    b.neighbors.resize(static_cast<Eigen::Index>(neighbors_.size()), items.cols());
    for (std::size_t r = 0; r < neighbors_.size(); ++r)
      b.neighbors.row(static_cast<Eigen::Index>(r)) = neighbors_[r].embedding.transpose();
    return b;
  }

  Vector personal_embedding() const { return hcfgnn::personal_embedding(make_batch(), snapshot_->params).personal; }

  void set_optimizer(const OptimizerConfig& cfg) { opt_ = VectorOptimizer(embedding_.size(), cfg); }

  // Forward/backward over up to batch_size sampled triples, then a local
  // optimizer step on the personal embedding. Item and attention gradients are
  // returned for upload; the user-embedding gradient stays here.
  LocalStepResult local_train_step(std::size_t batch_size) {
    LocalStepResult res;
    if (train_.empty()) {
      res.skipped = true;
      return res;
    }
    LocalBatch b = make_batch();
    std::vector<std::size_t> rows(train_.size());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    if (batch_size != 0 && batch_size < rows.size()) {
      for (std::size_t k = 0; k < batch_size; ++k)
        std::swap(rows[k], rows[k + uniform_index(rng_, rows.size() - k)]);
      rows.resize(batch_size);
      std::sort(rows.begin(), rows.end());
    }
    for (auto r : rows) b.targets.push_back({r, train_[r].value});
    const ForwardResult f = forward(b, snapshot_->params);
    res.loss = f.loss;
    res.grads = backward(b, snapshot_->params, f);
    opt_.step(embedding_, res.grads.d_user);
    require_finite(embedding_, "user embedding of client " + std::to_string(user_id_));
    return res;
  }

  ObfuscationResult obfuscate(GradientBundle g, const LdpConfig& cfg) {
    return hcfgnn::obfuscate(std::move(g), item_ids_, n_items_, cfg, rng_);
  }

  GradientBundle perturb(GradientBundle g, const LdpConfig& cfg) { return hcfgnn::perturb(std::move(g), cfg, rng_); }

  UplinkMessage build_upload(std::uint32_t round, const GradientBundle& perturbed, double loss, const LdpConfig& cfg) {
    UplinkMessage m;
    m.user_id = user_id_;
    m.round = round;
    m.num_u = train_.size();
    m.local_loss = train_.empty() ? 0.0 : loss;
    m.user_embedding = cfg.perturb_user_embedding ? perturb_value(embedding_, cfg, rng_) : embedding_;
    if (train_.empty()) {
      m.item_grads = Table(0, embedding_.size());
      return m;
    }
    m.item_ids = perturbed.item_ids;
    m.item_grads = perturbed.d_item;
    m.attn_grads = perturbed.d_attn;
    return m;
  }

  // A full round for this client: local steps, obfuscation, perturbation, upload.
  UplinkMessage participate(std::uint32_t round, const ClientConfig& cfg) {
    if (train_.empty()) return build_upload(round, GradientBundle{}, 0.0, cfg.ldp);
    const std::size_t steps = std::max<std::size_t>(1, cfg.local_steps);
    LocalStepResult acc = local_train_step(cfg.local_batch);
    double loss_sum = acc.loss;
    for (std::size_t s = 1; s < steps; ++s) {
      LocalStepResult r = local_train_step(cfg.local_batch);
      loss_sum += r.loss;
      acc.grads.d_item += r.grads.d_item;
      for (std::size_t i = 0; i < acc.grads.d_attn.size(); ++i) acc.grads.d_attn[i] += r.grads.d_attn[i];
    }
    if (steps > 1) {
      const double inv = 1.0 / static_cast<double>(steps);
      acc.grads.d_item *= inv;
      for (auto& g : acc.grads.d_attn) g *= inv;
    }
    ObfuscationResult ob = obfuscate(std::move(acc.grads), cfg.ldp);
    GradientBundle noisy = perturb(std::move(ob.grads), cfg.ldp);
    return build_upload(round, noisy, loss_sum / static_cast<double>(steps), cfg.ldp);
  }

 private:
  std::uint32_t user_id_;
  std::size_t n_items_;
  std::vector<Interaction> train_;
  std::vector<std::uint32_t> item_ids_;
  Vector embedding_;
  std::vector<NeighborEntry> neighbors_;
  std::shared_ptr<const GlobalSnapshot> snapshot_;
  Rng rng_;
  VectorOptimizer opt_;
};

}  // namespace hcfgnn
