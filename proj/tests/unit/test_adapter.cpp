// Copyright 2026 The verilm Authors.
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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "verilm/adapter/checkpoint.hpp"
#include "verilm/adapter/grad_check.hpp"
#include "verilm/adapter/model.hpp"
#include "verilm/error.hpp"

namespace verilm::adapter {
namespace {

std::vector<std::string> lora_linears(std::size_t n_blocks) {
  std::vector<std::string> out;
  for (std::size_t b = 0; b < n_blocks; ++b)
    for (const char* name : {"attn.q", "attn.k", "attn.v", "attn.o", "mlp.up", "mlp.down"})
      out.push_back("block" + std::to_string(b) + "." + name);
  return out;
}

// W_eff = W + (alpha / r) B A, written into the frozen weight.
AdapterModel<double> merged(const AdapterModel<double>& m) {
  AdapterModel<double> out = m;
  auto& p = out.params();
  const double scale = m.config().lora_alpha / double(m.config().lora_rank);
  for (const auto& name : lora_linears(m.config().n_blocks)) {
    auto W = p.values(p.find(name + ".weight"));
    auto A = p.values(p.find(name + ".lora_a"));
    auto B = p.values(p.find(name + ".lora_b"));
    const auto& wi = p.info(p.find(name + ".weight"));
    const std::size_t r = p.info(p.find(name + ".lora_a")).rows;
    for (std::size_t o = 0; o < wi.rows; ++o)
      for (std::size_t i = 0; i < wi.cols; ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < r; ++j) acc += B[o * r + j] * A[j * wi.cols + i];
        W[o * wi.cols + i] += scale * acc;
      }
    std::fill(B.begin(), B.end(), 0.0);
  }
  out.refresh_frozen_cache();
  return out;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d_spk = 4;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_blocks = 2;
  cfg.d_ff = 12;
  cfg.lora_rank = 2;
  cfg.lora_alpha = 4;
  return cfg;
}

TEST(Lora, HandExample) {
  // One-dimensional linear: W = 0, A = 1, B = 2, alpha = 1, r = 1, x = 3 gives 6,
  // the same as a plain linear with weight 2.
  ModelConfig cfg;
  cfg.d_spk = 2;
  cfg.d_model = 1;
  cfg.n_heads = 1;
  cfg.n_blocks = 1;
  cfg.d_ff = 1;
  cfg.lora_rank = 1;
  cfg.lora_alpha = 1;
  std::mt19937_64 rng(1);
  AdapterModel<double> m(cfg, rng);
  auto& p = m.params();
  for (const auto& name : lora_linears(1)) {
    p.values(p.find(name + ".weight"))[0] = 0.0;
    p.values(p.find(name + ".lora_a"))[0] = 1.0;
    p.values(p.find(name + ".lora_b"))[0] = 2.0;
  }
  m.refresh_frozen_cache();
  AdapterModel<double> plain = m;
  for (const auto& name : lora_linears(1)) {
    plain.params().values(plain.params().find(name + ".weight"))[0] = 2.0;
    plain.params().values(plain.params().find(name + ".lora_b"))[0] = 0.0;
  }
  plain.refresh_frozen_cache();
  std::vector<double> e{3.0, 0.5}, t{-1.0, 2.0};
  auto a = m.forward(e, t);
  auto b = plain.forward(e, t);
  EXPECT_NEAR(a.yes, b.yes, 1e-12);
  EXPECT_NEAR(a.no, b.no, 1e-12);
  EXPECT_EQ(m.config().lora_alpha / double(m.config().lora_rank) * 2.0 * 1.0 * 3.0, 6.0);
}

TEST(Lora, MatchesMergedWeights) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = random_small_config(rng);
    cfg.lora = true;
    auto m = random_check_model(cfg, rng);
    auto mm = merged(m);
    auto s = random_sample(cfg, rng);
    auto a = m.forward(s.enroll, s.test);
    auto b = mm.forward(s.enroll, s.test);
    EXPECT_NEAR(a.yes, b.yes, 1e-10);
    EXPECT_NEAR(a.no, b.no, 1e-10);
  }
}

TEST(Lora, IdentityAtInitIsBitwise) {
  std::mt19937_64 rng(3);
  AdapterModel<double> m(tiny_config(), rng);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> e(4), t(4);
    for (auto& x : e) x = g(rng);
    for (auto& x : t) x = g(rng);
    auto with = m.forward(e, t, true);
    auto without = m.forward(e, t, false);
    EXPECT_EQ(with.yes, without.yes);
    EXPECT_EQ(with.no, without.no);
  }
}

TEST(Model, ParameterLayout) {
  std::mt19937_64 rng(4);
  AdapterModel<float> m(tiny_config(), rng);
  const auto& p = m.params();
  std::size_t lora = 0;
  for (const auto& t : p.tensors()) {
    bool is_lora = t.name.find("lora_") != std::string::npos;
    bool is_head = t.name.starts_with("head.");
    bool is_connector = t.name.starts_with("connector.");
    EXPECT_EQ(t.trainable, is_lora || is_head || is_connector) << t.name;
    if (is_lora) lora += t.size();
    if (t.name.ends_with("lora_b"))
      for (float x : p.values(p.find(t.name))) EXPECT_EQ(x, 0.0f);
  }
  EXPECT_EQ(p.n_trainable(), lora + 8 * 2 + 2 + 4 * 8 + 8);
  auto frozen = tiny_config();
  frozen.lora = false;
  frozen.train_head = false;
  AdapterModel<float> f(frozen, rng);
  EXPECT_EQ(f.params().n_trainable(), 4u * 8 + 8);
  EXPECT_THROW(f.params().find("block0.attn.q.lora_a"), std::out_of_range);
}

TEST(Model, ConfigValidation) {
  auto cfg = tiny_config();
  cfg.n_heads = 3;
  EXPECT_THROW(AdapterModel<float>{cfg}, ConfigError);
  cfg = tiny_config();
  cfg.d_spk = 1;
  EXPECT_THROW(AdapterModel<float>{cfg}, ConfigError);
  cfg = tiny_config();
  cfg.lora_rank = 0;
  EXPECT_THROW(AdapterModel<float>{cfg}, ConfigError);
}

TEST(GradCheck, RandomConfigs) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    auto cfg = random_small_config(rng);
    auto m = random_check_model(cfg, rng);
    auto s = random_sample(cfg, rng);
    auto r = grad_check(m, s);
    EXPECT_LT(r.max_rel_error, 1e-4) << "config " << i << " worst " << r.worst_tensor;
    EXPECT_TRUE(r.frozen_grads_zero);
    EXPECT_EQ(r.n_checked, m.params().n_trainable());
  }
}

TEST(GradCheck, ExampleConfig) {
  ModelConfig cfg;
  cfg.d_spk = 4;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_blocks = 1;
  cfg.d_ff = 16;
  cfg.lora_rank = 2;
  cfg.lora_alpha = 4;
  std::mt19937_64 rng(6);
  auto m = random_check_model(cfg, rng);
  for (bool target : {true, false}) {
    auto s = random_sample(cfg, rng);
    s.target = target;
    EXPECT_LT(grad_check(m, s).max_rel_error, 1e-4);
  }
}

TEST(Gradient, TargetPushesYesUp) {
  std::mt19937_64 rng(7);
  AdapterModel<double> m(tiny_config(), rng);
  auto& p = m.params();
  for (auto id : {p.find("head.weight"), p.find("head.bias")})
    for (double& x : p.values(id)) x = 0.0;
  std::vector<double> e{1, 0, 0, 0}, t{0, 1, 0, 0};
  auto lg = m.forward(e, t);
  ASSERT_EQ(lg.yes, lg.no);
  Workspace<double> ws(m.config());
  std::vector<double> g(p.n_trainable(), 0.0);
  double loss = m.loss_and_grad(e, t, true, ws, g);
  EXPECT_NEAR(loss, std::log(2.0), 1e-12);
  auto gb = p.grad(std::span<const double>(g), p.find("head.bias"));
  EXPECT_NEAR(gb[0], -0.5, 1e-12);
  EXPECT_NEAR(gb[1], 0.5, 1e-12);
  std::fill(g.begin(), g.end(), 0.0);
  m.loss_and_grad(e, t, false, ws, g);
  gb = p.grad(std::span<const double>(g), p.find("head.bias"));
  EXPECT_NEAR(gb[0], 0.5, 1e-12);
}

TEST(Checkpoint, RoundTrip) {
  std::mt19937_64 rng(8);
  AdapterModel<float> m(tiny_config(), rng);
  auto& p = m.params();
  for (float& x : p.values(p.find("block1.mlp.down.lora_b"))) x = 0.25f;
  auto bytes = encode_checkpoint(m, {{"preset", "x"}});
  auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back.model.config(), m.config());
  EXPECT_EQ(back.metadata["preset"], "x");
  auto a = m.params().flat();
  auto b = back.model.params().flat();
  ASSERT_EQ(a.size(), b.size());
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  std::vector<float> e{1, 2, 3, 4}, t{4, 3, 2, 1};
  EXPECT_EQ(m.forward(e, t).yes, back.model.forward(e, t).yes);
  EXPECT_EQ(p.frozen_hash(), back.model.params().frozen_hash());
}

TEST(Checkpoint, CorruptInputRejected) {
  std::mt19937_64 rng(9);
  AdapterModel<float> m(tiny_config(), rng);
  auto bytes = encode_checkpoint(m);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 4)), ParseError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, 10)), ParseError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), ParseError);
  EXPECT_THROW(decode_checkpoint(""), ParseError);
}

TEST(Model, DimensionMismatchThrows) {
  std::mt19937_64 rng(10);
  AdapterModel<float> m(tiny_config(), rng);
  std::vector<float> e{1, 2, 3}, t{1, 2, 3, 4};
  EXPECT_THROW(m.forward(e, t), ConfigError);
}

}  // namespace
}  // namespace verilm::adapter
