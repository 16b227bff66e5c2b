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

// Report emission, sweeps and the three-variant ablation. Every file written
// here is a pure function of the config, so re-runs are byte-identical.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hcfgnn/harness.hpp"

#ifndef HCFGNN_BUILD_ID
#define HCFGNN_BUILD_ID "hcfgnn-dev"
#endif

namespace hcfgnn {

inline constexpr const char* kBuildId = HCFGNN_BUILD_ID;

struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  RunReport run;
};

inline json report_to_json(const RunReport& r) {
  json rounds = json::array();
  for (const auto& x : r.rounds)
    rounds.push_back({{"round", x.round},
                      {"global_loss", x.global_loss},
                      {"train_rmse", x.train_rmse},
                      {"valid_rmse", x.valid_rmse},
                      {"valid_mae", x.valid_mae},
                      {"steps", x.steps},
                      {"uplinks", x.uplinks}});
  return {{"config", r.config},
          {"provenance", {{"config_hash", r.config_hash}, {"seed", r.seed}, {"build_id", kBuildId}}},
          {"rounds", rounds},
          {"final",
           {{"best_round", r.best_round},
            {"early_stopped", r.early_stopped},
            {"test_rmse", r.test_rmse},
            {"test_mae", r.test_mae},
            {"baseline_test_rmse", r.baseline_test_rmse},
            {"baseline_test_mae", r.baseline_test_mae},
            {"uplink_bytes", r.up_bytes},
            {"downlink_bytes", r.down_bytes}}}};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

inline std::string trace_tsv(const RunReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "round\ttrain_loss\tvalid_rmse\tvalid_mae\n";
  for (const auto& x : r.rounds) os << x.round << '\t' << x.global_loss << '\t' << x.valid_rmse << '\t' << x.valid_mae << '\n';
  return os.str();
}

// Runs the harness and, when out_dir is set, writes report.json and trace.tsv.
inline MetricsReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir = {}) {
  RunOptions opts;
  opts.out_dir = out_dir;
  MetricsReport m;
  try {
    m.run = run(cfg, opts);
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " [config " + config_hash(cfg) + ", split " + cfg.dataset.split + "]");
  }
  m.rmse = m.run.test_rmse;
  m.mae = m.run.test_mae;
  if (m.rmse < m.mae) throw ContractError("report invariant violated: rmse < mae");
  if (!out_dir.empty()) {
    write_text(out_dir + "/report.json", report_to_json(m.run).dump(2) + "\n");
    write_text(out_dir + "/trace.tsv", trace_tsv(m.run));
  }
  return m;
}

enum class SweepAxis { kK, kBatch };

struct SweepPoint {
  std::size_t value = 0;
  bool ok = false;
  std::string error;
  double rmse = 0.0;
  double mae = 0.0;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::kK;
  std::vector<SweepPoint> points;

  // Index of the lowest-RMSE successful point, or -1.
  int argmin() const {
    int best = -1;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (points[i].ok && (best < 0 || points[i].rmse < points[static_cast<std::size_t>(best)].rmse))
        best = static_cast<int>(i);
    return best;
  }
};

inline const char* axis_name(SweepAxis a) { return a == SweepAxis::kK ? "k" : "batch"; }

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "k") return SweepAxis::kK;
  if (s == "batch") return SweepAxis::kBatch;
  throw ConfigError("unknown sweep axis: " + s);
}

inline std::string sweep_tsv(const SweepTable& t) {
  std::ostringstream os;
  os.precision(17);
  os << axis_name(t.axis) << "\trmse\tmae\tstatus\n";
  for (const auto& p : t.points)
    os << p.value << '\t' << p.rmse << '\t' << p.mae << '\t' << (p.ok ? "ok" : "error: " + p.error) << '\n';
  return os.str();
}

// One run per value with the base seed. Failed points are recorded and skipped.
inline SweepTable sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<std::size_t>& values,
                        const std::string& out_dir = {}) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  SweepTable t;
  t.axis = axis;
  for (std::size_t v : values) {
    ExperimentConfig cfg = base;
    (axis == SweepAxis::kK ? cfg.k : cfg.batch) = v;
    SweepPoint p;
    p.value = v;
    try {
      const std::string dir = out_dir.empty() ? "" : out_dir + "/" + axis_name(axis) + "_" + std::to_string(v);
      const MetricsReport m = run_experiment(cfg, dir);
      p.ok = true;
      p.rmse = m.rmse;
      p.mae = m.mae;
    } catch (const Error& e) {
      p.error = e.what();
    }
    t.points.push_back(std::move(p));
  }
  if (!out_dir.empty()) {
    write_text(out_dir + "/sweep_" + std::string(axis_name(axis)) + ".tsv", sweep_tsv(t));
    std::ostringstream dat;
    dat.precision(17);
    for (const auto& p : t.points)
      if (p.ok) dat << p.value << ' ' << p.rmse << '\n';
    write_text(out_dir + "/sweep_" + std::string(axis_name(axis)) + ".dat", dat.str());
  }
  return t;
}

// (variant - full) / variant: the relative error reduction of full.
inline double improvement(double variant_metric, double full_metric) {
  if (variant_metric == 0.0) return 0.0;
  return (variant_metric - full_metric) / variant_metric;
}

struct AblationTable {
  MetricsReport full;
  MetricsReport wo;
  MetricsReport all;

  double rmse_gain_vs_wo() const { return improvement(wo.rmse, full.rmse); }
  double mae_gain_vs_wo() const { return improvement(wo.mae, full.mae); }
  double rmse_gain_vs_all() const { return improvement(all.rmse, full.rmse); }
  double mae_gain_vs_all() const { return improvement(all.mae, full.mae); }
};

inline std::string ablation_tsv(const AblationTable& t) {
  std::ostringstream os;
  os.precision(17);
  os << "variant\trmse\tmae\n";
  os << "wo\t" << t.wo.rmse << '\t' << t.wo.mae << '\n';
  os << "all\t" << t.all.rmse << '\t' << t.all.mae << '\n';
  os << "full\t" << t.full.rmse << '\t' << t.full.mae << '\n';
  os << "improve_vs_wo\t" << 100.0 * t.rmse_gain_vs_wo() << '\t' << 100.0 * t.mae_gain_vs_wo() << '\n';
  os << "improve_vs_all\t" << 100.0 * t.rmse_gain_vs_all() << '\t' << 100.0 * t.mae_gain_vs_all() << '\n';
  return os.str();
}

inline AblationTable ablation(const ExperimentConfig& base, const std::string& out_dir = {}) {
  AblationTable t;
  auto one = [&](Variant v) {
    ExperimentConfig cfg = base;
    cfg.variant = v;
    return run_experiment(cfg, out_dir.empty() ? "" : out_dir + "/" + variant_name(v));
  };
  t.full = one(Variant::kFull);
  t.wo = one(Variant::kWithout);
  t.all = one(Variant::kAll);
  if (!out_dir.empty()) write_text(out_dir + "/ablation.tsv", ablation_tsv(t));
  return t;
}

}  // namespace hcfgnn
