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

// Experiment front end: run, sweep, ablation, split, check, synth.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hcfgnn/experiment.hpp"
#include "hcfgnn/selfcheck.hpp"

namespace {

using namespace hcfgnn;

// Command-line overrides; unset options leave the config file's value alone.
struct Overrides {
  std::string config;
  std::optional<std::string> dataset, split, variant, optimizer, batch_mode, similarity_heads;
  std::optional<std::size_t> dim, k, batch, heads, rounds, patience, local_steps, pseudo;
  std::optional<double> lr, l2, delta, lambda, init_std;
  std::optional<std::uint64_t> seed;
  bool published_grid = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON config file");
    app->add_option("--dataset", dataset, "matrix path or synthetic:rt / synthetic:tp");
    app->add_option("--split", split, "RT1..RT4 or TP1..TP4");
    app->add_option("--variant", variant, "full, wo or all");
    app->add_option("--optimizer", optimizer, "adam or sgd");
    app->add_option("--batch-mode", batch_mode, "clients or interactions");
    app->add_option("--similarity-heads", similarity_heads, "fixed or slices");
    app->add_option("--dim", dim);
    app->add_option("-k,--k", k);
    app->add_option("--batch", batch);
    app->add_option("--heads", heads);
    app->add_option("--rounds", rounds);
    app->add_option("--patience", patience);
    app->add_option("--local-steps", local_steps);
    app->add_option("--pseudo", pseudo, "pseudo items per real item");
    app->add_option("--lr", lr);
    app->add_option("--l2", l2);
    app->add_option("--delta", delta, "clipping threshold");
    app->add_option("--lambda", lambda, "noise multiplier");
    app->add_option("--init-std", init_std);
    app->add_option("--seed", seed);
    app->add_flag("--published-grid", published_grid, "restrict hyperparameters to the published grids");
  }

  ExperimentConfig build() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    if (dataset) c.dataset.path = *dataset;
    if (split) c.dataset.split = *split;
    if (variant) c.variant = parse_variant(*variant);
    if (optimizer) c.optimizer = parse_optimizer(*optimizer);
    if (batch_mode) {
      if (*batch_mode == "clients") c.batch_mode = BatchMode::kClients;
      else if (*batch_mode == "interactions") c.batch_mode = BatchMode::kInteractions;
      else throw ConfigError("unknown batch mode: " + *batch_mode);
    }
    if (similarity_heads) {
      if (*similarity_heads == "fixed") c.similarity_heads = SimilarityHeads::kFixed;
      else if (*similarity_heads == "slices") c.similarity_heads = SimilarityHeads::kSlices;
      else throw ConfigError("unknown similarity heads: " + *similarity_heads);
    }
    if (dim) c.dim = *dim;
    if (k) c.k = *k;
    if (batch) c.batch = *batch;
    if (heads) c.head_count = *heads;
    if (rounds) c.schedule.total_rounds = *rounds;
    if (patience) c.schedule.patience = *patience;
    if (local_steps) c.local_steps = *local_steps;
    if (pseudo) c.ldp.pseudo_count = *pseudo;
    if (lr) c.lr = *lr;
    if (l2) c.l2 = *l2;
    if (delta) c.ldp.delta = *delta;
    if (lambda) c.ldp.lambda = *lambda;
    if (init_std) c.init_std = *init_std;
    if (seed) c.seed = *seed;
    if (published_grid) c.published_grid = true;
    c.validate();
    return c;
  }
};

void print_run(const std::string& label, const MetricsReport& m) {
  std::printf("%-6s test_rmse=%.6f test_mae=%.6f best_round=%zu baseline_rmse=%.6f\n", label.c_str(), m.rmse, m.mae,
              m.run.best_round, m.run.baseline_test_rmse);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated graph-attention QoS prediction simulator"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, abl_o, split_o;
  std::string run_out = "out/run", sweep_out = "out/sweep", abl_out = "out/ablation";

  auto* run_cmd = app.add_subcommand("run", "train and evaluate one configuration");
  run_o.attach(run_cmd);
  run_cmd->add_option("-o,--out", run_out, "output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "one run per value of k or batch");
  sweep_o.attach(sweep_cmd);
  std::string axis = "k";
  std::vector<std::size_t> values;
  sweep_cmd->add_option("--axis", axis, "k or batch")->check(CLI::IsMember({"k", "batch"}));
  sweep_cmd->add_option("--values", values, "values to sweep")->delimiter(',');
  sweep_cmd->add_option("-o,--out", sweep_out, "output directory");

  auto* abl_cmd = app.add_subcommand("ablation", "run full, wo and all variants");
  abl_o.attach(abl_cmd);
  abl_cmd->add_option("-o,--out", abl_out, "output directory");

  auto* split_cmd = app.add_subcommand("split", "materialize a train/valid/test split manifest");
  split_o.attach(split_cmd);
  std::string manifest = "out/split.txt";
  split_cmd->add_option("-o,--out", manifest, "manifest file");

  auto* check_cmd = app.add_subcommand("check", "run the invariant and gradient suites");

  auto* synth_cmd = app.add_subcommand("synth", "write a WSDREAM-shaped surrogate matrix");
  std::string synth_kind = "rt", synth_out = "out/synthetic_rt.txt";
  std::uint64_t synth_seed = 1;
  synth_cmd->add_option("--kind", synth_kind)->check(CLI::IsMember({"rt", "tp"}));
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("-o,--out", synth_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const MetricsReport m = run_experiment(run_o.build(), run_out);
      print_run(variant_name(run_o.build().variant), m);
    } else if (sweep_cmd->parsed()) {
      if (values.empty()) values = axis == "k" ? std::vector<std::size_t>{5, 10, 20, 40, 80}
                                               : std::vector<std::size_t>{32, 64, 128, 256, 339};
      std::filesystem::create_directories(sweep_out);
      const SweepTable t = sweep(sweep_o.build(), parse_axis(axis), values, sweep_out);
      std::cout << sweep_tsv(t);
      for (const auto& p : t.points)
        if (!p.ok) return 1;
    } else if (abl_cmd->parsed()) {
      std::filesystem::create_directories(abl_out);
      std::cout << ablation_tsv(ablation(abl_o.build(), abl_out));
    } else if (split_cmd->parsed()) {
      const ExperimentConfig c = split_o.build();
      const QosMatrix m = load_source_matrix(c.dataset);
      const Split s = split(m, c.split_spec());
      const auto parent = std::filesystem::path(manifest).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      std::ofstream out(manifest, std::ios::binary);
      if (!out) throw Error("cannot write " + manifest);
      write_manifest(out, s);
      std::printf("users=%zu items=%zu observed=%zu train=%zu valid=%zu test=%zu\n", m.n_users(), m.n_items(),
                  m.observed_count(), s.train.size(), s.valid.size(), s.test.size());
    } else if (check_cmd->parsed()) {
      bool ok = true;
      for (const auto& r : selfcheck::run_all()) {
        std::printf("%-4s %-12s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    } else if (synth_cmd->parsed()) {
      const auto kind = synth_kind == "rt" ? SyntheticKind::kResponseTime : SyntheticKind::kThroughput;
      const auto parent = std::filesystem::path(synth_out).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      save_matrix(synth_out, generate_synthetic(SyntheticSpec::wsdream(kind, synth_seed)));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
