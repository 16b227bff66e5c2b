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

// Additive graph attention: E_j = LeakyReLU(a . [W c || W x_j]), softmax over j,
// and the attention-weighted aggregate sum_j alpha_j W x_j. Each forward piece has
// a matching backward that accumulates into caller-owned gradient buffers.

#include <string>

#include "hcfgnn/error.hpp"
#include "hcfgnn/random.hpp"
#include "hcfgnn/tensor.hpp"

namespace hcfgnn {

struct AttentionParams {
  Matrix W;  // out_dim x in_dim
  Vector a;  // 2 * out_dim: first half scores the center, second half the candidate
  double leaky_slope = 0.2;

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }

  void validate() const {
    if (a.size() != 2 * W.rows()) throw ShapeError("attention vector must have length 2 * out_dim");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0, 1)");
    require_finite(W, "attention W");
    require_finite(a, "attention a");
  }

  static AttentionParams zeros(Eigen::Index in_dim, Eigen::Index out_dim, double slope = 0.2) {
    return {Matrix::Zero(out_dim, in_dim), Vector::Zero(2 * out_dim), slope};
  }

  static AttentionParams identity(Eigen::Index dim, double slope = 0.2) {
    return {Matrix::Identity(dim, dim), Vector::Zero(2 * dim), slope};
  }

  static AttentionParams random(Eigen::Index in_dim, Eigen::Index out_dim, Rng& rng, double stddev,
                                double slope = 0.2) {
    AttentionParams p = zeros(in_dim, out_dim, slope);
    fill_normal(p.W, rng, stddev);
    fill_normal(p.a, rng, stddev);
    return p;
  }
};

// Gradient buffer shaped like AttentionParams.
struct AttentionGrad {
  Matrix dW;
  Vector da;

  static AttentionGrad zeros_like(const AttentionParams& p) {
    return {Matrix::Zero(p.W.rows(), p.W.cols()), Vector::Zero(p.a.size())};
  }
  AttentionGrad& operator+=(const AttentionGrad& o) {
    dW += o.dW;
    da += o.da;
    return *this;
  }
  AttentionGrad& operator*=(double s) {
    dW *= s;
    da *= s;
    return *this;
  }
};

struct AttentionScores {
  Vector pre;         // a . [W c || W x_j] before the activation
  Vector raw;         // E_j
  Vector normalized;  // softmax(E)_j
};

// Max-shifted softmax.
inline Vector stable_softmax(const Vector& raw) {
  if (raw.size() == 0) throw EmptySetError("softmax over an empty set");
  const double m = raw.maxCoeff();
  Vector e = (raw.array() - m).exp().matrix();
  return e / e.sum();
}

inline AttentionScores attention_scores(const Vector& center, const Table& candidates,
                                        const AttentionParams& p) {
  if (candidates.rows() == 0) throw EmptySetError("attention_scores: empty candidate set");
  require_dim(center.size(), p.in_dim(), "attention center");
  require_dim(candidates.cols(), p.in_dim(), "attention candidates");
  require_dim(p.a.size(), 2 * p.out_dim(), "attention vector");
  const Eigen::Index d_out = p.out_dim();
  // a1 . (W c) == (W^T a1) . c
  const Vector u_center = p.W.transpose() * p.a.head(d_out);
  const Vector u_cand = p.W.transpose() * p.a.tail(d_out);
  const double c_term = u_center.dot(center);
  AttentionScores s;
  s.pre = (candidates * u_cand).array() + c_term;
  s.raw = s.pre.unaryExpr([&](double x) { return leaky_relu(x, p.leaky_slope); });
  s.normalized = stable_softmax(s.raw);
  return s;
}

// sum_j alpha_j W x_j, computed as W (sum_j alpha_j x_j).
inline Vector aggregate(const AttentionScores& s, const Table& candidates, const AttentionParams& p) {
  require_dim(candidates.rows(), s.normalized.size(), "aggregate coefficient count");
  require_dim(candidates.cols(), p.in_dim(), "aggregate candidates");
  const Vector mixed = candidates.transpose() * s.normalized;
  return p.W * mixed;
}

// Backward of attention_scores. d_alpha is dL/d(normalized). Accumulates into
// d_center, d_candidates (if non-null) and grad.
inline void attention_backward(const Vector& center, const Table& candidates, const AttentionParams& p,
                               const AttentionScores& s, const Vector& d_alpha, Vector& d_center,
                               Table* d_candidates, AttentionGrad& grad) {
  const Eigen::Index d_out = p.out_dim();
  const Vector& alpha = s.normalized;
  const double mean_term = alpha.dot(d_alpha);
  Vector d_pre(alpha.size());
  for (Eigen::Index j = 0; j < alpha.size(); ++j)
    d_pre[j] = alpha[j] * (d_alpha[j] - mean_term) * leaky_relu_grad(s.pre[j], p.leaky_slope);

  const Vector u_center = p.W.transpose() * p.a.head(d_out);
  const Vector u_cand = p.W.transpose() * p.a.tail(d_out);
  const double total = d_pre.sum();

  d_center += total * u_center;
  if (d_candidates) d_candidates->noalias() += d_pre * u_cand.transpose();

  // u_center = W^T a1  =>  dW += a1 du_center^T, da1 += W du_center.
  const Vector du_center = total * center;
  const Vector du_cand = candidates.transpose() * d_pre;
  grad.dW.noalias() += p.a.head(d_out) * du_center.transpose();
  grad.dW.noalias() += p.a.tail(d_out) * du_cand.transpose();
  grad.da.head(d_out).noalias() += p.W * du_center;
  grad.da.tail(d_out).noalias() += p.W * du_cand;
}

// Backward of aggregate. Writes dL/d(normalized) into d_alpha (overwritten).
inline void aggregate_backward(const AttentionScores& s, const Table& candidates, const AttentionParams& p,
                               const Vector& d_out, Vector& d_alpha, Table* d_candidates,
                               AttentionGrad& grad) {
  const Vector mixed = candidates.transpose() * s.normalized;
  const Vector d_mixed = p.W.transpose() * d_out;
  grad.dW.noalias() += d_out * mixed.transpose();
  d_alpha = candidates * d_mixed;
  if (d_candidates) d_candidates->noalias() += s.normalized * d_mixed.transpose();
}

}  // namespace hcfgnn
