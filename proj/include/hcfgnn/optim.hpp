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

// Parameter update rules. L2 is coupled: it is added to the gradient before the
// rule is applied, for both SGD and Adam.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hcfgnn/error.hpp"
#include "hcfgnn/tensor.hpp"

namespace hcfgnn {

enum class OptimizerKind { kSgd, kAdam };

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer: " + s);
}

inline const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 0.01;
  double l2 = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Optimizer state for one dense tensor. Rows are tracked separately so that a
// row-sparse update (an item table where only uploaded rows change) keeps
// per-row moment estimates and bias corrections.
template <typename Tensor>
class RowOptimizer {
 public:
  RowOptimizer() = default;
  RowOptimizer(Eigen::Index rows, Eigen::Index cols, OptimizerConfig cfg) : cfg_(cfg) {
    if (cfg_.kind == OptimizerKind::kAdam) {
      m_ = Tensor::Zero(rows, cols);
      v_ = Tensor::Zero(rows, cols);
      steps_.assign(static_cast<std::size_t>(rows), 0);
    }
  }

  const OptimizerConfig& config() const { return cfg_; }

  template <typename P, typename G>
  void step_row(Eigen::Index row, P&& param, const G& grad) {
    const auto g = (grad + cfg_.l2 * param).eval();
    if (cfg_.kind == OptimizerKind::kSgd) {
      param -= cfg_.lr * g;
      return;
    }
    auto m = m_.row(row);
    auto v = v_.row(row);
    const auto t = ++steps_[static_cast<std::size_t>(row)];
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    param.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
  }

  // Whole-tensor step.
  template <typename G>
  void step(Tensor& param, const G& grad) {
    for (Eigen::Index r = 0; r < param.rows(); ++r) step_row(r, param.row(r), grad.row(r));
  }

 private:
  OptimizerConfig cfg_;
  Tensor m_;
  Tensor v_;
  std::vector<std::uint64_t> steps_;
};

using TableOptimizer = RowOptimizer<Table>;

// Vectors are stored as a single-row table for optimizer purposes.
class VectorOptimizer {
 public:
  VectorOptimizer() = default;
  VectorOptimizer(Eigen::Index n, OptimizerConfig cfg) : inner_(1, n, cfg) {}
  void step(Vector& param, const Vector& grad) {
    inner_.step_row(0, param.transpose(), grad.transpose());
  }

 private:
  TableOptimizer inner_;
};

}  // namespace hcfgnn
