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

#include <cmath>
#include <span>

#include "hcfgnn/error.hpp"

namespace hcfgnn {

struct ScoredPair {
  double predicted = 0.0;
  double actual = 0.0;
};

inline double rmse(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw UndefinedError("rmse of an empty set");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double r = p.predicted - p.actual;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

inline double mae(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw UndefinedError("mae of an empty set");
  double sum = 0.0;
  for (const auto& p : pairs) sum += std::abs(p.predicted - p.actual);
  return sum / static_cast<double>(pairs.size());
}

// Streaming accumulator for large evaluation sets.
struct ErrorAccumulator {
  double sq = 0.0;
  double abs = 0.0;
  std::size_t n = 0;

  void add(double predicted, double actual) {
    const double r = predicted - actual;
    sq += r * r;
    abs += std::abs(r);
    ++n;
  }
  double rmse() const {
    if (n == 0) throw UndefinedError("rmse of an empty set");
    return std::sqrt(sq / static_cast<double>(n));
  }
  double mae() const {
    if (n == 0) throw UndefinedError("mae of an empty set");
    return abs / static_cast<double>(n);
  }
};

}  // namespace hcfgnn
