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

// ExperimentConfig: everything that determines a run. Stored as JSON; the
// canonical dump (sorted keys) is echoed into every report and hashed.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hcfgnn/client.hpp"
#include "hcfgnn/server.hpp"

namespace hcfgnn {

using json = nlohmann::json;

enum class Variant { kFull, kWithout, kAll };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kWithout: return "wo";
    case Variant::kAll: return "all";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::kFull;
  if (s == "wo") return Variant::kWithout;
  if (s == "all") return Variant::kAll;
  throw ConfigError("unknown variant: " + s);
}

// How the batch grid value is read.
enum class BatchMode {
  kClients,       // clients per aggregation step
  kInteractions,  // per-client local batch; one aggregation step per round
};

struct DatasetConfig {
  // A matrix file path, or "synthetic:rt" / "synthetic:tp" for the surrogate.
  std::string path = "synthetic:rt";
  std::string split = "RT1";
  double missing_mark = kDefaultMissingMark;
  bool negative_is_missing = true;
  bool stratified = false;
  std::uint64_t synthetic_seed = 1;
  std::size_t synthetic_users = 339;
  std::size_t synthetic_items = 5825;
  // 0: the WSDREAM observed count for the chosen kind, scaled to the shape.
  std::size_t synthetic_observed = 0;
};

struct RoundSchedule {
  std::size_t total_rounds = 100;
  std::size_t patience = 10;  // 0 disables early stopping
  std::size_t refresh_every = 1;
  std::size_t checkpoint_every = 0;  // 0 disables checkpoints
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::size_t dim = 200;
  double init_std = 0.01;
  double leaky_slope = 0.2;
  bool separate_paths = false;
  double lr = 0.01;
  double l2 = 0.01;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::size_t k = 5;
  std::size_t batch = 128;
  BatchMode batch_mode = BatchMode::kClients;
  std::size_t head_count = 3;
  std::size_t local_steps = 1;
  ItemAggregation item_aggregation = ItemAggregation::kPerRow;
  SimilarityHeads similarity_heads = SimilarityHeads::kFixed;
  LdpConfig ldp;
  Variant variant = Variant::kFull;
  RoundSchedule schedule;
  std::uint64_t seed = 42;
  bool published_grid = false;

  void validate() const {
    if (schedule.total_rounds < 1) throw ConfigError("schedule.total_rounds must be >= 1");
    if (schedule.refresh_every < 1) throw ConfigError("schedule.refresh_every must be >= 1");
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (head_count < 1) throw ConfigError("head_count must be >= 1");
    if (similarity_heads == SimilarityHeads::kSlices && head_count > dim)
      throw ConfigError("head_count must not exceed dim for sliced similarity heads");
    if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0, 1)");
    ldp.validate();
    SplitSpec::named(dataset.split);
    if (published_grid) {
      auto in = [](auto v, std::initializer_list<decltype(v)> grid) {
        return std::find(grid.begin(), grid.end(), v) != grid.end();
      };
      if (dim != 200) throw ConfigError("published grid: dim must be 200");
      if (!in(lr, {0.01, 0.1})) throw ConfigError("published grid: lr must be 0.01 or 0.1");
      if (!in(l2, {0.01, 0.1})) throw ConfigError("published grid: l2 must be 0.01 or 0.1");
      if (!in(k, {std::size_t{5}, std::size_t{10}, std::size_t{20}, std::size_t{40}, std::size_t{80}}))
        throw ConfigError("published grid: k must be one of 5, 10, 20, 40, 80");
      if (!in(batch, {std::size_t{32}, std::size_t{64}, std::size_t{128}, std::size_t{256}, std::size_t{339}}))
        throw ConfigError("published grid: batch must be one of 32, 64, 128, 256, 339");
    }
  }

  OptimizerConfig optimizer_config() const {
    OptimizerConfig o;
    o.kind = optimizer;
    o.lr = lr;
    o.l2 = l2;
    return o;
  }

  SplitSpec split_spec() const {
    SplitSpec s = SplitSpec::named(dataset.split, seed);
    s.stratified = dataset.stratified;
    return s;
  }

  ClientConfig client_config() const {
    ClientConfig c;
    c.optimizer = optimizer_config();
    c.local_steps = local_steps;
    c.local_batch = batch_mode == BatchMode::kInteractions ? batch : 0;
    c.max_neighbors = variant == Variant::kWithout ? 0 : k;
    c.ldp = ldp;
    return c;
  }

  ServerConfig server_config() const {
    ServerConfig s;
    s.optimizer = optimizer_config();
    s.k = variant == Variant::kFull ? k : 0;
    s.item_aggregation = item_aggregation;
    s.similarity_heads = similarity_heads;
    return s;
  }
};

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {{"path", c.dataset.path},
                  {"split", c.dataset.split},
                  {"missing_mark", c.dataset.missing_mark},
                  {"negative_is_missing", c.dataset.negative_is_missing},
                  {"stratified", c.dataset.stratified},
                  {"synthetic_seed", c.dataset.synthetic_seed},
                  {"synthetic_users", c.dataset.synthetic_users},
                  {"synthetic_items", c.dataset.synthetic_items},
                  {"synthetic_observed", c.dataset.synthetic_observed}};
  j["model"] = {{"dim", c.dim},
                {"init_std", c.init_std},
                {"leaky_slope", c.leaky_slope},
                {"separate_paths", c.separate_paths}};
  j["train"] = {{"lr", c.lr},
                {"l2", c.l2},
                {"optimizer", optimizer_name(c.optimizer)},
                {"k", c.k},
                {"batch", c.batch},
                {"batch_mode", c.batch_mode == BatchMode::kClients ? "clients" : "interactions"},
                {"head_count", c.head_count},
                {"local_steps", c.local_steps},
                {"item_aggregation", c.item_aggregation == ItemAggregation::kPerRow ? "per_row" : "global"},
                {"similarity_heads", c.similarity_heads == SimilarityHeads::kFixed ? "fixed" : "slices"}};
  j["ldp"] = {{"delta", c.ldp.delta},
              {"lambda", c.ldp.lambda},
              {"pseudo_count", c.ldp.pseudo_count},
              {"scale_mode", c.ldp.scale_mode == NoiseScaleMode::kMeanAbs ? "mean_abs" : "signed_mean"},
              {"perturb_user_embedding", c.ldp.perturb_user_embedding}};
  j["schedule"] = {{"total_rounds", c.schedule.total_rounds},
                   {"patience", c.schedule.patience},
                   {"refresh_every", c.schedule.refresh_every},
                   {"checkpoint_every", c.schedule.checkpoint_every}};
  j["variant"] = variant_name(c.variant);
  j["seed"] = c.seed;
  j["published_grid"] = c.published_grid;
  return j;
}

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key: " + where + key);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j) {
  using detail::read;
  ExperimentConfig c;
  detail::reject_unknown(j, {"dataset", "model", "train", "ldp", "schedule", "variant", "seed", "published_grid"}, "");
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    detail::reject_unknown(d,
                           {"path", "split", "missing_mark", "negative_is_missing", "stratified", "synthetic_seed",
                            "synthetic_users", "synthetic_items", "synthetic_observed"},
                           "dataset.");
    read(d, "path", c.dataset.path);
    read(d, "split", c.dataset.split);
    read(d, "missing_mark", c.dataset.missing_mark);
    read(d, "negative_is_missing", c.dataset.negative_is_missing);
    read(d, "stratified", c.dataset.stratified);
    read(d, "synthetic_seed", c.dataset.synthetic_seed);
    read(d, "synthetic_users", c.dataset.synthetic_users);
    read(d, "synthetic_items", c.dataset.synthetic_items);
    read(d, "synthetic_observed", c.dataset.synthetic_observed);
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::reject_unknown(m, {"dim", "init_std", "leaky_slope", "separate_paths"}, "model.");
    read(m, "dim", c.dim);
    read(m, "init_std", c.init_std);
    read(m, "leaky_slope", c.leaky_slope);
    read(m, "separate_paths", c.separate_paths);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    detail::reject_unknown(
        t, {"lr", "l2", "optimizer", "k", "batch", "batch_mode", "head_count", "local_steps", "item_aggregation",
            "similarity_heads"},
        "train.");
    read(t, "lr", c.lr);
    read(t, "l2", c.l2);
    read(t, "k", c.k);
    read(t, "batch", c.batch);
    read(t, "head_count", c.head_count);
    read(t, "local_steps", c.local_steps);
    std::string opt;
    read(t, "optimizer", opt);
    if (!opt.empty()) c.optimizer = parse_optimizer(opt);
    std::string mode;
    read(t, "batch_mode", mode);
    if (mode == "interactions") c.batch_mode = BatchMode::kInteractions;
    else if (!mode.empty() && mode != "clients") throw ConfigError("unknown batch_mode: " + mode);
    std::string agg;
    read(t, "item_aggregation", agg);
    if (agg == "global") c.item_aggregation = ItemAggregation::kGlobal;
    else if (!agg.empty() && agg != "per_row") throw ConfigError("unknown item_aggregation: " + agg);
    std::string sim;
    read(t, "similarity_heads", sim);
    if (sim == "slices") c.similarity_heads = SimilarityHeads::kSlices;
    else if (!sim.empty() && sim != "fixed") throw ConfigError("unknown similarity_heads: " + sim);
  }
  if (j.contains("ldp")) {
    const auto& l = j["ldp"];
    detail::reject_unknown(l, {"delta", "lambda", "pseudo_count", "scale_mode", "perturb_user_embedding"}, "ldp.");
    read(l, "delta", c.ldp.delta);
    read(l, "lambda", c.ldp.lambda);
    read(l, "pseudo_count", c.ldp.pseudo_count);
    read(l, "perturb_user_embedding", c.ldp.perturb_user_embedding);
    std::string mode;
    read(l, "scale_mode", mode);
    if (mode == "signed_mean") c.ldp.scale_mode = NoiseScaleMode::kSignedMean;
    else if (!mode.empty() && mode != "mean_abs") throw ConfigError("unknown ldp.scale_mode: " + mode);
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    detail::reject_unknown(s, {"total_rounds", "patience", "refresh_every", "checkpoint_every"}, "schedule.");
    read(s, "total_rounds", c.schedule.total_rounds);
    read(s, "patience", c.schedule.patience);
    read(s, "refresh_every", c.schedule.refresh_every);
    read(s, "checkpoint_every", c.schedule.checkpoint_every);
  }
  if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
  read(j, "seed", c.seed);
  read(j, "published_grid", c.published_grid);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

// FNV-1a over the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace hcfgnn
