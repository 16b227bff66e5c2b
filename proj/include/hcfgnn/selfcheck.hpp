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

// Invariant and gradient suites runnable from the CLI `check` verb. The
// gradient check compares backward() against central finite differences of
// forward(), so it shares nothing with the analytic path beyond the forward pass.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hcfgnn/ldp.hpp"
#include "hcfgnn/server.hpp"

namespace hcfgnn::selfcheck {

struct ToyInstance {
  LocalBatch batch;
  ModelParams params;
};

// d in [2, 5], 1..4 items, 0..3 neighbors, random subset of items as targets.
inline ToyInstance random_toy(std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kCheck);
  const auto dim = static_cast<Eigen::Index>(2 + uniform_index(rng, 4));
  const auto n_items = static_cast<Eigen::Index>(1 + uniform_index(rng, 4));
  const auto n_nbrs = static_cast<Eigen::Index>(uniform_index(rng, 4));
  ToyInstance t;
  t.params = ModelParams::init(dim, uniform_index(rng, 2) == 1, rng, 0.7);
  t.batch.user.resize(dim);
  fill_normal(t.batch.user, rng, 1.0);
  t.batch.items.resize(n_items, dim);
  fill_normal(t.batch.items, rng, 1.0);
  t.batch.neighbors.resize(n_nbrs, dim);
  fill_normal(t.batch.neighbors, rng, 1.0);
  for (Eigen::Index i = 0; i < n_items; ++i) {
    t.batch.item_ids.push_back(static_cast<std::uint32_t>(10 * i + 3));
    if (i == 0 || uniform_index(rng, 2) == 1)
      t.batch.targets.push_back({static_cast<std::size_t>(i), 3.0 * uniform_open(rng)});
  }
  return t;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // parameter name of the worst entry
  std::size_t entries = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor absorbs central
// difference roundoff (about eps * loss / step) on entries whose true gradient is 0.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline GradCheckResult gradient_check(const ToyInstance& toy, double step = 1e-5) {
  LocalBatch b = toy.batch;
  ModelParams p = toy.params;
  const GradientBundle g = backward(b, p, forward(b, p));
  GradCheckResult res;
  auto probe = [&](double& slot, double analytic, const std::string& name) {
    const double saved = slot;
    slot = saved + step;
    const double up = forward(b, p).loss;
    slot = saved - step;
    const double down = forward(b, p).loss;
    slot = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double err = relative_error(analytic, numeric);
    ++res.entries;
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst = name;
    }
  };
  for (Eigen::Index i = 0; i < b.user.size(); ++i) probe(b.user[i], g.d_user[i], "user");
  for (Eigen::Index r = 0; r < b.items.rows(); ++r)
    for (Eigen::Index c = 0; c < b.items.cols(); ++c) probe(b.items(r, c), g.d_item(r, c), "item");
  for (std::size_t k = 0; k < p.attn.size(); ++k) {
    for (Eigen::Index r = 0; r < p.attn[k].W.rows(); ++r)
      for (Eigen::Index c = 0; c < p.attn[k].W.cols(); ++c)
        probe(p.attn[k].W(r, c), g.d_attn[k].dW(r, c), "W[" + std::to_string(k) + "]");
    for (Eigen::Index i = 0; i < p.attn[k].a.size(); ++i)
      probe(p.attn[k].a[i], g.d_attn[k].da[i], "a[" + std::to_string(k) + "]");
  }
  return res;
}

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline CheckOutcome check_gradients(std::size_t seeds = 100, double tol = 1e-4) {
  double worst = 0.0;
  std::string where;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto r = gradient_check(random_toy(s));
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = r.worst + " (seed " + std::to_string(s) + ")";
    }
  }
  std::ostringstream os;
  os << "max relative error " << worst << " at " << where;
  return {"gradient", worst < tol, os.str()};
}

inline CheckOutcome check_attention(std::size_t cases = 10000) {
  Rng rng = make_rng(7, Stream::kCheck, {1});
  double worst_sum = 0.0, worst_shift = 0.0;
  bool positive = true, singleton = true;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto dim = static_cast<Eigen::Index>(1 + uniform_index(rng, 6));
    const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 12));
    const double scale = std::pow(10.0, uniform_open(rng) - 1.0);
    AttentionParams p = AttentionParams::random(dim, dim, rng, scale);
    Vector center(dim);
    fill_normal(center, rng, scale);
    Table cand(n, dim);
    fill_normal(cand, rng, scale);
    const AttentionScores s = attention_scores(center, cand, p);
    worst_sum = std::max(worst_sum, std::abs(s.normalized.sum() - 1.0));
    positive = positive && (s.normalized.array() > 0.0).all() && (s.normalized.array() <= 1.0).all();
    const double shift = 50.0 * (2.0 * uniform_open(rng) - 1.0);
    const Vector shifted = stable_softmax((s.raw.array() + shift).matrix());
    worst_shift = std::max(worst_shift, (shifted - s.normalized).cwiseAbs().maxCoeff());
    const AttentionScores one = attention_scores(center, cand.topRows(1), p);
    singleton = singleton && one.normalized[0] == 1.0;
  }
  std::ostringstream os;
  os << "sum error " << worst_sum << ", shift error " << worst_shift << ", positive " << positive << ", singleton "
     << singleton;
  return {"attention", worst_sum <= 1e-9 && worst_shift <= 1e-9 && positive && singleton, os.str()};
}

// Exhaustive oracle: full sort of every row.
inline std::vector<std::vector<std::uint32_t>> exhaustive_top_k(const Matrix& scores, std::size_t k) {
  const auto n = static_cast<std::size_t>(scores.rows());
  std::vector<std::vector<std::uint32_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::uint32_t>> row;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.emplace_back(-scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), static_cast<std::uint32_t>(j));
    std::sort(row.begin(), row.end());
    for (std::size_t r = 0; r < k; ++r) out[i].push_back(row[r].second);
  }
  return out;
}

inline CheckOutcome check_top_k(std::size_t seeds = 100) {
  std::size_t mismatches = 0, cases = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng = make_rng(s, Stream::kCheck, {2});
    for (std::size_t n = 2; n <= 10; ++n) {
      Matrix scores(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      // Coarse values force ties.
      for (Eigen::Index i = 0; i < scores.size(); ++i) scores.data()[i] = static_cast<double>(uniform_index(rng, 4)) / 4.0;
      const Table users = Table::Zero(static_cast<Eigen::Index>(n), 1);
      for (std::size_t k = 1; k < n; ++k) {
        const auto got = select_top_k(scores, k, users);
        const auto want = exhaustive_top_k(scores, k);
        ++cases;
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<std::uint32_t> ids;
          for (const auto& e : got[i]) ids.push_back(e.user_id);
          if (ids != want[i]) {
            ++mismatches;
            break;
          }
        }
      }
    }
  }
  return {"top_k", mismatches == 0, std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"};
}

struct NoiseStats {
  double scale = 0.0;
  double mean = 0.0;
  double mean_abs_dev = 0.0;
};

// Perturbs an n-entry tensor of ones (delta 1, lambda 1) and reports the noise.
inline NoiseStats unit_tensor_noise(std::size_t n, std::uint64_t seed) {
  LdpConfig cfg;
  cfg.delta = 1.0;
  cfg.lambda = 1.0;
  Table t = Table::Ones(1, static_cast<Eigen::Index>(n));
  Rng rng = make_rng(seed, Stream::kCheck, {3});
  NoiseStats s;
  s.scale = clip_and_noise(t, cfg, rng);
  const Table noise = t.array() - 1.0;
  s.mean = noise.mean();
  s.mean_abs_dev = (noise.array() - s.mean).abs().mean();
  return s;
}

inline CheckOutcome check_ldp() {
  const NoiseStats s = unit_tensor_noise(100000, 11);
  const bool stats_ok = std::abs(s.mean) <= 0.02 && std::abs(s.mean_abs_dev - s.scale) <= 0.05 * s.scale;
  LdpConfig cfg;
  cfg.delta = 1.0;
  cfg.lambda = 0.0;
  Rng rng = make_rng(3, Stream::kCheck, {4});
  Table t(1, 1000);
  fill_normal(t, rng, 5.0);
  const Table before = t;
  clip_and_noise(t, cfg, rng);
  const Table want = before.cwiseMax(-1.0).cwiseMin(1.0);
  const bool clamp_ok = (t.array() == want.array()).all();
  std::ostringstream os;
  os << "b " << s.scale << ", noise mean " << s.mean << ", MAD " << s.mean_abs_dev << ", clamp exact " << clamp_ok;
  return {"ldp", stats_ok && clamp_ok, os.str()};
}

inline CheckOutcome check_global_loss() {
  std::vector<UplinkMessage> msgs(3);
  const double nums[] = {2, 3, 5}, losses[] = {1, 2, 3};
  for (int i = 0; i < 3; ++i) {
    msgs[i].num_u = static_cast<std::uint64_t>(nums[i]);
    msgs[i].local_loss = losses[i];
  }
  const double got = global_loss(msgs);
  return {"global_loss", got == 59.0, "num (2,3,5), L (1,2,3) -> " + std::to_string(got)};
}

inline std::vector<CheckOutcome> run_all() {
  return {check_gradients(), check_attention(), check_top_k(), check_ldp(), check_global_loss()};
}

}  // namespace hcfgnn::selfcheck
