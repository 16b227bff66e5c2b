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


#include <algorithm>
#include <cstring>
#include <limits>
#include <memory>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hcfgnn/selfcheck.hpp"

namespace hcfgnn {
namespace {

LdpConfig ldp(double delta, double lambda, std::size_t pseudo = 0) {
  LdpConfig c;
  c.delta = delta;
  c.lambda = lambda;
  c.pseudo_count = pseudo;
  return c;
}

GradientBundle bundle_with_items(std::vector<std::uint32_t> ids, Eigen::Index dim, Rng& rng) {
  ModelParams p = ModelParams::init(dim, false, rng, 0.3);
  GradientBundle g = GradientBundle::zeros(dim, std::move(ids), p);
  fill_normal(g.d_item, rng, 1.0);
  fill_normal(g.d_attn[0].dW, rng, 1.0);
  fill_normal(g.d_attn[0].da, rng, 1.0);
  return g;
}

TEST(Perturb, PureClamp) {
  Rng rng = make_rng(1, Stream::kCheck);
  Vector x(3);
  x << -5, 0.3, 5;
  clip_and_noise(x, ldp(1.0, 0.0), rng);
  EXPECT_EQ(x[0], -1.0);
  EXPECT_EQ(x[1], 0.3);
  EXPECT_EQ(x[2], 1.0);
}

TEST(Perturb, InfiniteDeltaZeroLambdaIsIdentity) {
  Rng rng = make_rng(2, Stream::kCheck);
  const GradientBundle g = bundle_with_items({1, 4}, 3, rng);
  const GradientBundle out = perturb(g, ldp(std::numeric_limits<double>::infinity(), 0.0), rng);
  EXPECT_EQ(out.d_item, g.d_item);
  EXPECT_EQ(out.d_attn[0].dW, g.d_attn[0].dW);
  EXPECT_EQ(out.d_attn[0].da, g.d_attn[0].da);
}

TEST(Perturb, ClampBoundHoldsOnEveryTensor) {
  Rng rng = make_rng(3, Stream::kCheck);
  for (int t = 0; t < 20; ++t) {
    GradientBundle g = bundle_with_items({0, 2, 9}, 4, rng);
    g.d_item *= 10.0;
    const GradientBundle out = perturb(g, ldp(0.25, 0.0), rng);
    EXPECT_LE(out.d_item.cwiseAbs().maxCoeff(), 0.25);
    EXPECT_LE(out.d_attn[0].dW.cwiseAbs().maxCoeff(), 0.25);
    EXPECT_LE(out.d_attn[0].da.cwiseAbs().maxCoeff(), 0.25);
  }
}

TEST(Perturb, ZeroTensorGetsNoNoise) {
  Rng rng = make_rng(4, Stream::kCheck);
  Table z = Table::Zero(3, 3);
  EXPECT_EQ(clip_and_noise(z, ldp(1.0, 1.0), rng), 0.0);
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Perturb, LaplaceStatisticsOnUnitTensor) {
  const auto s = selfcheck::unit_tensor_noise(100000, 17);
  EXPECT_EQ(s.scale, 1.0);
  EXPECT_LT(std::abs(s.mean), 0.02);
  EXPECT_LT(std::abs(s.mean_abs_dev - 1.0), 0.05);
}

TEST(Perturb, NoiseScaleModes) {
  Vector x(4);
  x << 1, -1, 2, -2;
  EXPECT_DOUBLE_EQ(noise_scale(x, 0.5, NoiseScaleMode::kMeanAbs), 0.75);
  EXPECT_DOUBLE_EQ(noise_scale(x, 0.5, NoiseScaleMode::kSignedMean), 0.0);
}

TEST(Perturb, InvalidConfig) {
  Rng rng = make_rng(5, Stream::kCheck);
  const GradientBundle g = bundle_with_items({1}, 2, rng);
  EXPECT_THROW(perturb(g, ldp(0.0, 0.1), rng), ConfigError);
  EXPECT_THROW(perturb(g, ldp(1.0, -0.1), rng), ConfigError);
}

TEST(Obfuscate, ZeroPseudoKeepsKeys) {
  Rng rng = make_rng(6, Stream::kCheck);
  const GradientBundle g = bundle_with_items({3, 1, 7}, 2, rng);
  const std::vector<std::uint32_t> interacted{3, 1, 7};
  const auto r = obfuscate(g, interacted, 10, ldp(1, 0, 0), rng);
  EXPECT_EQ(r.grads.item_ids, g.item_ids);
  EXPECT_TRUE(r.pseudo_ids.empty());
}

TEST(Obfuscate, CountingExample) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = make_rng(seed, Stream::kCheck);
    const std::vector<std::uint32_t> real{2, 5, 8};
    const GradientBundle g = bundle_with_items(real, 3, rng);
    const auto r = obfuscate(g, real, 10, ldp(1, 0.1, 2), rng);
    const auto& ids = r.grads.item_ids;
    ASSERT_EQ(ids.size(), 9u);
    EXPECT_EQ(std::set<std::uint32_t>(ids.begin(), ids.end()).size(), 9u);
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
    for (auto id : ids) EXPECT_LT(id, 10u);
    for (auto id : r.pseudo_ids) EXPECT_EQ(std::count(real.begin(), real.end(), id), 0);
    ASSERT_EQ(r.grads.d_item.rows(), 9);
    // Real rows keep their gradients; pseudo rows carry zero signal before perturbation.
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto it = std::find(real.begin(), real.end(), ids[k]);
      const auto row = r.grads.d_item.row(static_cast<Eigen::Index>(k));
      if (it == real.end()) EXPECT_EQ(row.cwiseAbs().maxCoeff(), 0.0);
      else EXPECT_EQ(row, g.d_item.row(it - real.begin()));
    }
  }
}

TEST(Obfuscate, PoolSmallerThanRequest) {
  Rng rng = make_rng(7, Stream::kCheck);
  const std::vector<std::uint32_t> real{0, 1, 2};
  const auto r = obfuscate(bundle_with_items(real, 2, rng), real, 5, ldp(1, 0, 2), rng);
  EXPECT_EQ(r.grads.item_ids, (std::vector<std::uint32_t>{0, 1, 2, 3, 4}));
  EXPECT_FALSE(r.pool_exhausted);
}

TEST(Obfuscate, ExhaustedPoolIsFlagged) {
  Rng rng = make_rng(8, Stream::kCheck);
  const std::vector<std::uint32_t> real{0, 1, 2};
  const GradientBundle g = bundle_with_items(real, 2, rng);
  const auto r = obfuscate(g, real, 3, ldp(1, 0, 2), rng);
  EXPECT_TRUE(r.pool_exhausted);
  EXPECT_EQ(r.grads.item_ids, g.item_ids);
  EXPECT_EQ(r.grads.d_item, g.d_item);
}

// A client over a fixed snapshot with W = I and a = 0: every attention is
// uniform, so e' = (e_u + mean(items)) / 2 with no neighbors.
struct ToyClient {
  std::shared_ptr<GlobalSnapshot> snap = std::make_shared<GlobalSnapshot>();
  std::vector<Interaction> train{{0, 1, 0.8}, {0, 3, 1.7}};
  Vector e_u{{0.5, -0.25}};

  ToyClient() {
    snap->items = Table(4, 2);
    snap->items << 0.1, 0.2, 0.9, -0.4, 0.3, 0.3, -0.6, 1.1;
    snap->params.attn.push_back(AttentionParams::zeros(2, 2));
    snap->params.attn[0].W.setIdentity();
  }
  ClientNode make(std::uint64_t seed = 1) const {
    ClientNode c(0, train, 4, e_u, seed);
    c.receive(snap);
    return c;
  }
};

TEST(Client, ToyLossMatchesHandRmse) {
  ToyClient t;
  ClientNode c = t.make();
  const Vector personal = 0.5 * (t.e_u + 0.5 * (t.snap->items.row(1) + t.snap->items.row(3)).transpose());
  const double r1 = personal.dot(t.snap->items.row(1)) - 0.8;
  const double r2 = personal.dot(t.snap->items.row(3)) - 1.7;
  const LocalStepResult res = c.local_train_step(0);
  EXPECT_FALSE(res.skipped);
  EXPECT_NEAR(res.loss, std::sqrt((r1 * r1 + r2 * r2) / 2.0), 1e-14);
  EXPECT_NE(c.embedding(), t.e_u);
}

TEST(Client, ZeroResidualBatch) {
  ToyClient t;
  const Vector personal = 0.5 * (t.e_u + 0.5 * (t.snap->items.row(1) + t.snap->items.row(3)).transpose());
  t.train[0].value = personal.dot(t.snap->items.row(1));
  t.train[1].value = personal.dot(t.snap->items.row(3));
  ClientNode c = t.make();
  const LocalStepResult res = c.local_train_step(0);
  EXPECT_NEAR(res.loss, 0.0, 1e-15);
  if (res.loss == 0.0) EXPECT_EQ(res.grads.d_item.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Client, EmptyTrainSkips) {
  ToyClient t;
  t.train.clear();
  ClientNode c = t.make();
  EXPECT_TRUE(c.local_train_step(0).skipped);
  const UplinkMessage m = c.participate(1, ClientConfig{});
  EXPECT_EQ(m.num_u, 0u);
  EXPECT_TRUE(m.item_ids.empty());
  EXPECT_EQ(m.item_grads.rows(), 0);
  EXPECT_TRUE(m.attn_grads.empty());
}

TEST(Client, SameSeedSameBytes) {
  ToyClient t;
  ClientConfig cfg;
  cfg.ldp = ldp(0.5, 0.1, 1);
  ClientNode a = t.make(9), b = t.make(9);
  EXPECT_EQ(encode(a.participate(1, cfg)), encode(b.participate(1, cfg)));
  ClientNode c = t.make(10);
  EXPECT_NE(encode(a.participate(2, cfg)), encode(c.participate(2, cfg)));
}

TEST(Client, UploadKeysAreRealUnionPseudo) {
  ToyClient t;
  ClientNode c = t.make(3);
  const LocalStepResult s = c.local_train_step(0);
  const auto ob = c.obfuscate(s.grads, ldp(0.5, 0.1, 1));
  const UplinkMessage m = c.build_upload(1, c.perturb(ob.grads, ldp(0.5, 0.1, 1)), s.loss, ldp(0.5, 0.1, 1));
  std::set<std::uint32_t> want{1, 3};
  want.insert(ob.pseudo_ids.begin(), ob.pseudo_ids.end());
  EXPECT_EQ(std::set<std::uint32_t>(m.item_ids.begin(), m.item_ids.end()), want);
  EXPECT_EQ(m.item_ids.size(), 4u);
  EXPECT_EQ(m.num_u, 2u);
  EXPECT_EQ(m.user_embedding, c.embedding());
}

TEST(Client, RejectsBadDownlinks) {
  ToyClient t;
  ClientNode c = t.make();
  DownlinkMessage d;
  d.user_id = 1;
  EXPECT_THROW(c.receive(d, 5), ContractError);
  d.user_id = 0;
  d.neighbors = {{0, 1.0, Vector::Zero(2)}};
  EXPECT_THROW(c.receive(d, 5), ContractError);
  d.neighbors = {{1, 1.0, Vector::Zero(2)}, {2, 0.5, Vector::Zero(2)}};
  EXPECT_THROW(c.receive(d, 1), ContractError);
  EXPECT_NO_THROW(c.receive(d, 2));
  EXPECT_EQ(c.neighbors().size(), 2u);
}

TEST(Client, NoSnapshotIsAContractError) {
  ClientNode c(0, {{0, 1, 1.0}}, 4, Vector::Zero(2), 1);
  EXPECT_THROW(c.local_train_step(0), ContractError);
}

// Every 8-byte window of the encoded uplink is compared against every train value.
TEST(Privacy, NoTrainValueInOutboundBytes) {
  const ExperimentConfig cfg = testing::tiny_config();
  const Dataset data = load_dataset(cfg);
  Simulation sim(cfg, data);
  for (int r = 0; r < 2; ++r) sim.run_round();
  std::size_t checked = 0;
  for (const auto& [user, bytes] : sim.last_uplinks()) {
    std::set<std::uint64_t> secret;
    for (const auto& e : data.train[user]) secret.insert(std::bit_cast<std::uint64_t>(e.value));
    for (std::size_t off = 0; off + 8 <= bytes.size(); ++off) {
      std::uint64_t w = 0;
      std::memcpy(&w, bytes.data() + off, 8);
      ASSERT_EQ(secret.count(w), 0u) << "user " << user << " offset " << off;
    }
    const UplinkMessage m = decode_uplink(bytes);
    for (const auto& e : data.train[user]) {
      EXPECT_FALSE((m.item_grads.array() == e.value).any());
      EXPECT_FALSE((m.user_embedding.array() == e.value).any());
      EXPECT_NE(m.local_loss, e.value);
    }
    ++checked;
  }
  EXPECT_EQ(checked, cfg.dataset.synthetic_users);
}

UplinkMessage random_uplink(Rng& rng) {
  UplinkMessage m;
  const auto dim = static_cast<Eigen::Index>(1 + uniform_index(rng, 5));
  m.user_id = static_cast<std::uint32_t>(uniform_index(rng, 1000));
  m.round = static_cast<std::uint32_t>(uniform_index(rng, 100));
  m.num_u = uniform_index(rng, 50);
  m.local_loss = sample_normal(rng);
  m.user_embedding.resize(dim);
  fill_normal(m.user_embedding, rng, 1.0);
  const std::size_t n = uniform_index(rng, 6);
  for (std::size_t i = 0; i < n; ++i) m.item_ids.push_back(static_cast<std::uint32_t>(3 * i + 1));
  m.item_grads.resize(static_cast<Eigen::Index>(n), dim);
  fill_normal(m.item_grads, rng, 1.0);
  const std::size_t paths = uniform_index(rng, 4);
  for (std::size_t p = 0; p < paths; ++p) {
    AttentionGrad g{Matrix(dim, dim), Vector(2 * dim)};
    fill_normal(g.dW, rng, 1.0);
    fill_normal(g.da, rng, 1.0);
    m.attn_grads.push_back(g);
  }
  return m;
}

TEST(Codec, UplinkRoundTrip) {
  Rng rng = make_rng(11, Stream::kCheck);
  for (int t = 0; t < 200; ++t) {
    const UplinkMessage m = random_uplink(rng);
    const Bytes b = encode(m);
    const UplinkMessage back = decode_uplink(b);
    EXPECT_EQ(back.user_id, m.user_id);
    EXPECT_EQ(back.round, m.round);
    EXPECT_EQ(back.num_u, m.num_u);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.local_loss), std::bit_cast<std::uint64_t>(m.local_loss));
    EXPECT_EQ(back.user_embedding, m.user_embedding);
    EXPECT_EQ(back.item_ids, m.item_ids);
    EXPECT_EQ(back.item_grads, m.item_grads);
    ASSERT_EQ(back.attn_grads.size(), m.attn_grads.size());
    for (std::size_t i = 0; i < m.attn_grads.size(); ++i) {
      EXPECT_EQ(back.attn_grads[i].dW, m.attn_grads[i].dW);
      EXPECT_EQ(back.attn_grads[i].da, m.attn_grads[i].da);
    }
    EXPECT_EQ(encode(back), b);
  }
}

TEST(Codec, SpecialValuesSurvive) {
  UplinkMessage m;
  m.user_embedding = Vector(4);
  m.user_embedding << -0.0, std::numeric_limits<double>::denorm_min(), 1e308, -1e-308;
  m.item_grads = Table(0, 4);
  const UplinkMessage back = decode_uplink(encode(m));
  for (Eigen::Index i = 0; i < 4; ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.user_embedding[i]), std::bit_cast<std::uint64_t>(m.user_embedding[i]));
}

TEST(Codec, DownlinkAndSnapshotRoundTrip) {
  Rng rng = make_rng(12, Stream::kCheck);
  DownlinkMessage d{7, 3, {}};
  for (std::uint32_t j = 0; j < 4; ++j) {
    Vector e(3);
    fill_normal(e, rng, 1.0);
    d.neighbors.push_back({j, 1.0 / (j + 1), e});
  }
  const DownlinkMessage db = decode_downlink(encode(d));
  EXPECT_EQ(db.user_id, 7u);
  EXPECT_EQ(db.round, 3u);
  ASSERT_EQ(db.neighbors.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(db.neighbors[j].user_id, d.neighbors[j].user_id);
    EXPECT_EQ(db.neighbors[j].score, d.neighbors[j].score);
    EXPECT_EQ(db.neighbors[j].embedding, d.neighbors[j].embedding);
  }
  GlobalSnapshot s;
  s.round = 5;
  s.items = Table(6, 3);
  fill_normal(s.items, rng, 1.0);
  s.params = ModelParams::init(3, true, rng, 0.5, 0.1);
  const GlobalSnapshot sb = decode_snapshot(encode(s));
  EXPECT_EQ(sb.round, 5u);
  EXPECT_EQ(sb.items, s.items);
  ASSERT_EQ(sb.params.attn.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(sb.params.attn[i].W, s.params.attn[i].W);
    EXPECT_EQ(sb.params.attn[i].a, s.params.attn[i].a);
    EXPECT_EQ(sb.params.attn[i].leaky_slope, 0.1);
  }
}

TEST(Codec, MalformedInputIsRejected) {
  Rng rng = make_rng(13, Stream::kCheck);
  const Bytes b = encode(random_uplink(rng));
  for (std::size_t cut = 0; cut < b.size(); cut += 3) {
    const Bytes shortened(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(decode_uplink(shortened), CodecError) << "cut " << cut;
  }
  Bytes longer = b;
  longer.push_back(0);
  EXPECT_THROW(decode_uplink(longer), CodecError);
  Bytes bad_magic = b;
  bad_magic[0] ^= 0xff;
  EXPECT_THROW(decode_uplink(bad_magic), CodecError);
  EXPECT_THROW(decode_downlink(b), CodecError);
  EXPECT_THROW(decode_snapshot(b), CodecError);
}

TEST(Codec, LittleEndianLayout) {
  UplinkMessage m;
  m.user_id = 0x01020304;
  m.user_embedding = Vector(0);
  m.item_grads = Table(0, 0);
  const Bytes b = encode(m);
  ASSERT_GE(b.size(), 12u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "HCUP");
  const std::uint32_t len = b[4] | (b[5] << 8) | (b[6] << 16) | (static_cast<std::uint32_t>(b[7]) << 24);
  EXPECT_EQ(len, b.size() - 8);
  EXPECT_EQ(b[8], 0x04);
  EXPECT_EQ(b[11], 0x01);
}

}  // namespace
}  // namespace hcfgnn
