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

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "verilm/adapter/model.hpp"

namespace verilm::adapter {

struct GradCheckSample {
  std::vector<double> enroll;
  std::vector<double> test;
  bool target = true;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_tensor;
  std::size_t n_checked = 0;
  /// Gradient expanded to the full parameter vector is zero on every frozen slot.
  bool frozen_grads_zero = true;
};

/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Central differences over every trainable scalar.
GradCheckResult grad_check(const AdapterModel<double>& model, const GradCheckSample& sample,
                           double epsilon = 1e-5);

/// Full-length gradient with zeros in frozen slots.
std::vector<double> expand_gradient(const ParameterSet<double>& params,
                                    std::span<const double> grads);

/// Small random architecture (d_spk, d_model, heads, blocks, rank all varied).
ModelConfig random_small_config(std::mt19937_64& rng);

/// Random init plus nonzero LoRA B, so every adapter path carries gradient.
AdapterModel<double> random_check_model(const ModelConfig& cfg, std::mt19937_64& rng);

/// Unit-norm embeddings for the given config.
GradCheckSample random_sample(const ModelConfig& cfg, std::mt19937_64& rng);

}  // namespace verilm::adapter
