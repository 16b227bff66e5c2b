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

// Deterministic round orchestration. Clients and the coordinator only see each
// other's data as encoded bytes passing through SimTransport.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hcfgnn/checkpoint.hpp"
#include "hcfgnn/config.hpp"
#include "hcfgnn/synthetic.hpp"

namespace hcfgnn {

struct Dataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::vector<Interaction>> train;
  InteractionSet valid;
  InteractionSet test;

  std::size_t train_size() const {
    std::size_t n = 0;
    for (const auto& t : train) n += t.size();
    return n;
  }
};

inline QosMatrix load_source_matrix(const DatasetConfig& d) {
  if (d.path.starts_with("synthetic:")) {
    const std::string kind = d.path.substr(10);
    SyntheticSpec s;
    if (kind == "rt") s = SyntheticSpec::wsdream(SyntheticKind::kResponseTime, d.synthetic_seed);
    else if (kind == "tp") s = SyntheticSpec::wsdream(SyntheticKind::kThroughput, d.synthetic_seed);
    else throw ConfigError("unknown synthetic dataset: " + d.path);
    const double density = static_cast<double>(s.observed) / (339.0 * 5825.0);
    s.n_users = d.synthetic_users;
    s.n_items = d.synthetic_items;
    s.observed = d.synthetic_observed != 0
                     ? d.synthetic_observed
                     : static_cast<std::size_t>(std::llround(density * static_cast<double>(s.n_users * s.n_items)));
    return generate_synthetic(s);
  }
  return load_matrix(d.path, d.missing_mark, d.negative_is_missing);
}

inline Dataset make_dataset(const QosMatrix& m, const SplitSpec& spec) {
  Split s = split(m, spec);
  Dataset d;
  d.n_users = m.n_users();
  d.n_items = m.n_items();
  d.train = partition_by_user(s.train);
  d.valid = std::move(s.valid);
  d.test = std::move(s.test);
  return d;
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  return make_dataset(load_source_matrix(cfg.dataset), cfg.split_spec());
}

// Message queues plus delivered-byte counters. Uplinks drain in user-id order.
class SimTransport {
 public:
  void broadcast(const Bytes& b, std::size_t recipients) {
    down_bytes_ += b.size() * recipients;
    down_messages_ += recipients;
  }
  void send_down(std::uint32_t user, Bytes b) {
    down_bytes_ += b.size();
    ++down_messages_;
    down_[user] = std::move(b);
  }
  Bytes receive_down(std::uint32_t user) {
    auto it = down_.find(user);
    if (it == down_.end()) throw ContractError("no downlink queued for user " + std::to_string(user));
    Bytes b = std::move(it->second);
    down_.erase(it);
    return b;
  }
  void send_up(std::uint32_t user, Bytes b) {
    up_bytes_ += b.size();
    ++up_messages_;
    up_.emplace(user, std::move(b));
  }
  std::vector<std::pair<std::uint32_t, Bytes>> drain_up() {
    std::vector<std::pair<std::uint32_t, Bytes>> out(std::make_move_iterator(up_.begin()),
                                                      std::make_move_iterator(up_.end()));
    up_.clear();
    return out;
  }

  std::uint64_t up_bytes() const { return up_bytes_; }
  std::uint64_t down_bytes() const { return down_bytes_; }
  std::uint64_t up_messages() const { return up_messages_; }
  std::uint64_t down_messages() const { return down_messages_; }

 private:
  std::multimap<std::uint32_t, Bytes> up_;
  std::map<std::uint32_t, Bytes> down_;
  std::uint64_t up_bytes_ = 0;
  std::uint64_t down_bytes_ = 0;
  std::uint64_t up_messages_ = 0;
  std::uint64_t down_messages_ = 0;
};

struct RoundRecord {
  std::size_t round = 0;
  double global_loss = 0.0;  // sum over the round's steps of sum_u num_u L_u^2
  double train_rmse = 0.0;   // sqrt(global_loss / sum num_u)
  double valid_rmse = 0.0;
  double valid_mae = 0.0;
  std::size_t steps = 0;
  std::size_t uplinks = 0;
};

struct RunReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  json config;
  std::vector<RoundRecord> rounds;
  std::size_t best_round = 0;
  bool early_stopped = false;
  double test_rmse = 0.0;
  double test_mae = 0.0;
  double baseline_test_rmse = 0.0;  // constant train-mean predictor
  double baseline_test_mae = 0.0;
  std::uint64_t up_bytes = 0;
  std::uint64_t down_bytes = 0;
};

struct RunOptions {
  std::string out_dir;  // round log and checkpoints go here when set
  std::function<void(const RoundRecord&)> on_round;
};

class Simulation {
 public:
  Simulation(ExperimentConfig cfg, Dataset data) : cfg_(std::move(cfg)), data_(std::move(data)) {
    cfg_.validate();
    if (data_.n_users < 2) throw ConfigError("need at least 2 users");
    if (cfg_.variant == Variant::kFull && cfg_.k >= data_.n_users)
      throw ConfigError("k must be smaller than the user count");
    const auto dim = static_cast<Eigen::Index>(cfg_.dim);
    const std::uint64_t seed = cfg_.seed;

    Table items(static_cast<Eigen::Index>(data_.n_items), dim);
    Rng item_rng = make_rng(seed, Stream::kItemInit);
    fill_normal(items, item_rng, cfg_.init_std);
    Rng attn_rng = make_rng(seed, Stream::kAttentionInit);
    ModelParams params = ModelParams::init(dim, cfg_.separate_paths, attn_rng, cfg_.init_std, cfg_.leaky_slope);
    std::vector<AttentionParams> heads;
    for (std::size_t h = 0; h < cfg_.head_count; ++h) {
      Rng head_rng = make_rng(seed, Stream::kHeadInit, {h});
      heads.push_back(AttentionParams::random(dim, dim, head_rng, cfg_.init_std, cfg_.leaky_slope));
    }
    server_ = std::make_unique<Coordinator>(Table::Zero(static_cast<Eigen::Index>(data_.n_users), dim),
                                            std::move(items), std::move(params), std::move(heads),
                                            cfg_.server_config());

    for (std::uint32_t u = 0; u < data_.n_users; ++u) {
      Vector e(dim);
      Rng init = make_rng(seed, Stream::kClientInit, {u});
      fill_normal(e, init, cfg_.init_std);
      clients_.emplace_back(u, data_.train[u], data_.n_items, std::move(e),
                            derive_seed(seed, Stream::kClientRound, {u}));
      clients_.back().set_optimizer(cfg_.optimizer_config());
    }
    // Initial embedding upload so the server can rank users before round 1.
    for (auto& c : clients_) {
      UplinkMessage hello;
      hello.user_id = c.user_id();
      hello.user_embedding = c.embedding();
      hello.item_grads = Table(0, dim);
      transport_.send_up(c.user_id(), encode(hello));
    }
    for (auto& [user, bytes] : transport_.drain_up()) {
      const UplinkMessage m = decode_uplink(bytes);
      server_->set_user(m.user_id, m.user_embedding);
    }
    if (cfg_.variant == Variant::kAll)
      co_assignment_ = co_interaction_neighbors(data_.train, data_.n_items, cfg_.k, server_->users());
  }

  const ExperimentConfig& config() const { return cfg_; }
  const Coordinator& server() const { return *server_; }
  const std::vector<ClientNode>& clients() const { return clients_; }
  std::vector<ClientNode>& mutable_clients() { return clients_; }
  const SimTransport& transport() const { return transport_; }
  const NeighborAssignment& assignment() const { return assignment_; }
  // Encoded uplinks of the most recent round, keyed by user.
  const std::map<std::uint32_t, Bytes>& last_uplinks() const { return last_uplinks_; }
  std::size_t rounds_done() const { return round_; }

  RoundRecord run_round() {
    ++round_;
    const auto r32 = static_cast<std::uint32_t>(round_);
    RoundRecord rec;
    rec.round = round_;
    try {
      refresh_neighbors();
      const ClientConfig ccfg = cfg_.client_config();
      std::vector<std::uint32_t> order(data_.n_users);
      std::iota(order.begin(), order.end(), 0u);
      Rng sched = make_rng(cfg_.seed, Stream::kSchedule, {round_});
      shuffle(order.begin(), order.end(), sched);
      const std::size_t step =
          cfg_.batch_mode == BatchMode::kClients ? std::min(cfg_.batch, order.size()) : order.size();
      last_uplinks_.clear();
      std::uint64_t weight = 0;
      for (std::size_t begin = 0; begin < order.size(); begin += step) {
        std::vector<std::uint32_t> group(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(begin + step, order.size())));
        std::sort(group.begin(), group.end());

        const Bytes snap_bytes = encode(server_->snapshot());
        transport_.broadcast(snap_bytes, group.size());
        auto snapshot = std::make_shared<const GlobalSnapshot>(decode_snapshot(snap_bytes));
        for (const auto& m : server_->broadcast(assignment_, group)) transport_.send_down(m.user_id, encode(m));

        for (auto u : group) {
          ClientNode& c = clients_[u];
          c.receive(decode_downlink(transport_.receive_down(u)), ccfg.max_neighbors);
          c.receive(snapshot);
          Bytes up = encode(c.participate(r32, ccfg));
          last_uplinks_[u] = up;
          transport_.send_up(u, std::move(up));
        }
        std::vector<UplinkMessage> msgs;
        for (auto& [user, bytes] : transport_.drain_up()) msgs.push_back(decode_uplink(bytes));
        rec.uplinks += msgs.size();
        const AggregateResult agg = server_->aggregate_round(msgs);
        if (!std::isfinite(agg.global_loss))
          throw NumericError("global loss is not finite (aggregation step " + std::to_string(rec.steps) + ")");
        rec.global_loss += agg.global_loss;
        weight += agg.total_weight;
        ++rec.steps;
      }
      rec.train_rmse = weight > 0 ? std::sqrt(rec.global_loss / static_cast<double>(weight)) : 0.0;
      server_->next_round();

      const Table personal = personal_embeddings();
      const auto [vr, vm] = evaluate(data_.valid, personal, server_->items());
      rec.valid_rmse = vr;
      rec.valid_mae = vm;
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(round_) + ": " + e.what());
    }
    return rec;
  }

  // End-of-round personal embeddings e'_u for every client.
  Table personal_embeddings() {
    const Bytes snap_bytes = encode(server_->snapshot());
    auto snapshot = std::make_shared<const GlobalSnapshot>(decode_snapshot(snap_bytes));
    Table out(static_cast<Eigen::Index>(data_.n_users), static_cast<Eigen::Index>(cfg_.dim));
    for (auto& c : clients_) {
      c.receive(snapshot);
      out.row(c.user_id()) = c.personal_embedding().transpose();
    }
    return out;
  }

  static std::pair<double, double> evaluate(const InteractionSet& set, const Table& personal, const Table& items) {
    if (set.size() == 0) return {0.0, 0.0};
    ErrorAccumulator acc;
    for (const auto& e : set.entries()) acc.add(personal.row(e.user).dot(items.row(e.item)), e.value);
    return {acc.rmse(), acc.mae()};
  }

  std::vector<NamedTensor> checkpoint_tensors() const {
    std::vector<NamedTensor> t{{"users", server_->users()}, {"items", server_->items()}};
    for (auto& p : params_to_tensors(server_->params(), "attn")) t.push_back(std::move(p));
    for (std::size_t h = 0; h < server_->heads().size(); ++h) {
      t.emplace_back("head" + std::to_string(h) + ".W", server_->heads()[h].W);
      t.emplace_back("head" + std::to_string(h) + ".a", Table(server_->heads()[h].a.transpose()));
    }
    return t;
  }

  RunReport run(const RunOptions& opts = {}) {
    RunReport rep;
    rep.config = to_json(cfg_);
    rep.config_hash = config_hash(cfg_);
    rep.seed = cfg_.seed;

    std::ofstream round_log;
    if (!opts.out_dir.empty()) {
      std::filesystem::create_directories(opts.out_dir);
      round_log.open(opts.out_dir + "/rounds.log");
    }
    double best = std::numeric_limits<double>::infinity();
    Table best_personal, best_items;
    std::size_t since_best = 0;
    for (std::size_t r = 0; r < cfg_.schedule.total_rounds; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      RoundRecord rec = run_round();
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rep.rounds.push_back(rec);
      if (round_log) round_log << rec.round << ' ' << rec.global_loss << ' ' << wall << '\n';
      if (opts.on_round) opts.on_round(rec);
      if (!opts.out_dir.empty() && cfg_.schedule.checkpoint_every > 0 && rec.round % cfg_.schedule.checkpoint_every == 0)
        write_bytes(opts.out_dir + "/checkpoint_" + std::to_string(rec.round) + ".bin",
                    encode_checkpoint(checkpoint_tensors()));
      // Validation selects the checkpoint; an empty validation set keeps the last round.
      if (data_.valid.size() == 0 || rec.valid_rmse < best) {
        best = rec.valid_rmse;
        rep.best_round = rec.round;
        best_personal = personal_embeddings();
        best_items = server_->items();
        since_best = 0;
      } else if (cfg_.schedule.patience > 0 && ++since_best >= cfg_.schedule.patience) {
        rep.early_stopped = true;
        break;
      }
    }
    std::tie(rep.test_rmse, rep.test_mae) = evaluate(data_.test, best_personal, best_items);

    double mean = 0.0;
    const std::size_t n_train = data_.train_size();
    for (const auto& t : data_.train)
      for (const auto& e : t) mean += e.value;
    mean = n_train ? mean / static_cast<double>(n_train) : 0.0;
    if (data_.test.size() > 0) {
      ErrorAccumulator base;
      for (const auto& e : data_.test.entries()) base.add(mean, e.value);
      rep.baseline_test_rmse = base.rmse();
      rep.baseline_test_mae = base.mae();
    }
    rep.up_bytes = transport_.up_bytes();
    rep.down_bytes = transport_.down_bytes();
    return rep;
  }

 private:
  void refresh_neighbors() {
    const bool due = (round_ - 1) % cfg_.schedule.refresh_every == 0;
    switch (cfg_.variant) {
      case Variant::kWithout:
        assignment_.assign(data_.n_users, {});
        break;
      case Variant::kFull:
        if (due || assignment_.empty()) assignment_ = server_->select_neighbors();
        break;
      case Variant::kAll:
        if (due || assignment_.empty()) {
          assignment_ = co_assignment_;
          for (auto& row : assignment_)
            for (auto& n : row) n.embedding = server_->users().row(n.user_id).transpose();
        }
        break;
    }
  }

  ExperimentConfig cfg_;
  Dataset data_;
  std::unique_ptr<Coordinator> server_;
  std::vector<ClientNode> clients_;
  SimTransport transport_;
  NeighborAssignment assignment_;
  NeighborAssignment co_assignment_;
  std::map<std::uint32_t, Bytes> last_uplinks_;
  std::size_t round_ = 0;
};

inline RunReport run(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  Simulation sim(cfg, load_dataset(cfg));
  return sim.run(opts);
}

}  // namespace hcfgnn
