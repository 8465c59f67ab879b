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

#include "verilm/adapter/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace verilm::adapter {

std::vector<double> expand_gradient(const ParameterSet<double>& params,
                                    std::span<const double> grads) {
  std::vector<double> full(params.size(), 0.0);
  for (std::size_t id = 0; id < params.tensors().size(); ++id) {
    const auto& t = params.info(id);
    auto g = params.grad(grads, id);
    std::copy(g.begin(), g.end(), full.begin() + std::ptrdiff_t(t.offset));
  }
  return full;
}

GradCheckResult grad_check(const AdapterModel<double>& model, const GradCheckSample& sample,
                           double epsilon) {
  GradCheckResult res;
  const auto& p = model.params();
  std::vector<double> grads(p.n_trainable(), 0.0);
  Workspace<double> ws(model.config());
  model.loss_and_grad(sample.enroll, sample.test, sample.target, ws, grads);

  const auto full = expand_gradient(p, grads);
  for (const auto& t : p.tensors()) {
    if (t.trainable) continue;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (full[t.offset + i] != 0.0) res.frozen_grads_zero = false;
  }

  AdapterModel<double> probe = model.cast<double>();
  auto values = probe.params().flat();
  for (const auto& t : p.tensors()) {
    if (!t.trainable) continue;
    for (std::size_t i = 0; i < t.size(); ++i) {
      double& v = values[t.offset + i];
      const double saved = v;
      v = saved + epsilon;
      const double up = probe.loss(sample.enroll, sample.test, sample.target);
      v = saved - epsilon;
      const double down = probe.loss(sample.enroll, sample.test, sample.target);
      v = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = full[t.offset + i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel =
          abs_err / std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
      res.max_abs_error = std::max(res.max_abs_error, abs_err);
      if (res.n_checked == 0 || rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_tensor = t.name;
      }
      ++res.n_checked;
    }
  }
  return res;
}

ModelConfig random_small_config(std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  ModelConfig cfg;
  cfg.d_spk = pick(2, 6);
  cfg.n_heads = pick(1, 2);
  cfg.d_model = cfg.n_heads * pick(2, 5);
  cfg.n_blocks = pick(1, 2);
  cfg.d_ff = pick(4, 12);
  cfg.lora_rank = pick(1, 3);
  cfg.lora_alpha = std::uniform_real_distribution<double>(0.5, 8.0)(rng);
  cfg.lora = pick(0, 3) != 0;
  cfg.train_head = pick(0, 3) != 0;
  return cfg;
}

AdapterModel<double> random_check_model(const ModelConfig& cfg, std::mt19937_64& rng) {
  AdapterModel<double> model(cfg, rng);
  std::normal_distribution<double> gauss(0.0, 0.3);
  auto& p = model.params();
  for (std::size_t id = 0; id < p.tensors().size(); ++id) {
    const auto& name = p.info(id).name;
    if (name.size() > 7 && name.compare(name.size() - 7, 7, ".lora_b") == 0)
      for (auto& v : p.values(id)) v = gauss(rng);
    if (name == "head.bias")
      for (auto& v : p.values(id)) v = gauss(rng);
  }
  return model;
}

GradCheckSample random_sample(const ModelConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto unit = [&] {
    std::vector<double> v(cfg.d_spk);
    double n = 0;
    for (auto& x : v) {
      x = gauss(rng);
      n += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n);
    return v;
  };
  GradCheckSample s;
  s.enroll = unit();
  s.test = unit();
  s.target = std::bernoulli_distribution(0.5)(rng);
  return s;
}

}  // namespace verilm::adapter
