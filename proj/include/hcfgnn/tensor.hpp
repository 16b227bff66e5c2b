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

#include <Eigen/Dense>

#include <string>

#include "hcfgnn/error.hpp"

namespace hcfgnn {

using Vector = Eigen::VectorXd;
// Embedding tables are row-major so that one embedding is one contiguous row.
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Table;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const std::string& name) {
  if (!x.allFinite()) throw NumericError("non-finite values in " + name);
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const std::string& what) {
  if (got != want) {
    throw ShapeError(what + ": expected dimension " + std::to_string(want) + ", got " +
                     std::to_string(got));
  }
}

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_relu_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

}  // namespace hcfgnn
