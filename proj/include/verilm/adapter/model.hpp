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

// Desk-scale speaker-aware decoder.
//
// Each utterance embedding goes through a trainable linear connector and
// becomes one pseudo-token. The decoder sees
//
//   [prompt] [speaker 1] [separator] [speaker 2] [answer]
//
// with frozen marker/position embeddings, runs causal pre-norm transformer
// blocks whose projections carry LoRA adapters, and reads two logits
// (Yes, No) from the answer position. The base weights are frozen; only the
// connector, the LoRA A/B matrices and the head train.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "verilm/adapter/parameters.hpp"

namespace verilm::adapter {

struct ModelConfig {
  std::size_t d_spk = 32;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_blocks = 2;
  std::size_t d_ff = 128;
  std::size_t lora_rank = 4;
  double lora_alpha = 8.0;
  bool lora = true;        // false: frozen backbone, no adapters
  bool train_head = true;  // false: the head stays at its initial values

  static constexpr std::size_t kSeqLen = 5;
  static constexpr std::size_t kSpeaker1 = 1;
  static constexpr std::size_t kSpeaker2 = 3;
  static constexpr std::size_t kAnswer = 4;

  /// Throws ConfigError on inconsistent sizes.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <class T>
struct Logits {
  T yes = 0;
  T no = 0;
};

/// Frozen weight plus optional low-rank delta:
/// W_eff = W + (alpha / r) * B * A, with B zero-initialized.
struct LoraLinearIds {
  std::size_t in = 0, out = 0;
  ParameterSet<float>::Id weight = 0;  // out x in, frozen
  ParameterSet<float>::Id lora_a = 0;  // r x in
  ParameterSet<float>::Id lora_b = 0;  // out x r
  bool has_lora = false;
  std::size_t transposed = 0;  // offset of W^T in the frozen cache
};

struct BlockIds {
  ParameterSet<float>::Id norm1 = 0, norm2 = 0;
  LoraLinearIds q, k, v, o, up, down;
};

template <class T>
class Workspace;

template <class T>
class AdapterModel {
 public:
  /// Random initialization drawn from `rng`.
  AdapterModel(const ModelConfig& cfg, std::mt19937_64& rng);
  /// Empty parameters with the right layout; fill via params() and call
  /// refresh_frozen_cache().
  explicit AdapterModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  /// Rebuilds derived data (W^T copies) after frozen values change.
  void refresh_frozen_cache();

  /// Throws ConfigError on an embedding width mismatch. `use_lora = false`
  /// evaluates the base model (adapters skipped).
  Logits<T> forward(std::span<const T> enroll, std::span<const T> test,
                    bool use_lora = true) const;
  Logits<T> forward(std::span<const T> enroll, std::span<const T> test, Workspace<T>& ws,
                    bool use_lora = true) const;

  /// Two-class cross-entropy of the (yes, no) logits against `target` (true =
  /// same speaker). Adds d loss / d trainable into `grads`
  /// (size n_trainable()) and returns the loss.
  T loss_and_grad(std::span<const T> enroll, std::span<const T> test, bool target,
                  Workspace<T>& ws, std::span<T> grads) const;
  T loss(std::span<const T> enroll, std::span<const T> test, bool target) const;

  /// Values of another precision, same layout.
  template <class U>
  AdapterModel<U> cast() const;

 private:
  template <class U>
  friend class AdapterModel;

  void build_layout();
  void init_random(std::mt19937_64& rng);

  ModelConfig cfg_;
  ParameterSet<T> params_;
  ParameterSet<float>::Id connector_w_ = 0, connector_b_ = 0;
  ParameterSet<float>::Id markers_ = 0, positions_ = 0;
  std::vector<BlockIds> blocks_;
  ParameterSet<float>::Id final_norm_ = 0, head_w_ = 0, head_b_ = 0;
  std::vector<T> transposed_;  // W^T of every frozen LoRA-linear weight
};

/// Per-call activations kept for the backward pass. One per thread.
template <class T>
class Workspace {
 public:
  explicit Workspace(const ModelConfig& cfg);

 private:
  friend class AdapterModel<T>;
  struct Block {
    std::vector<T> x, n1, inv1, q, k, v, zq, zk, zv, probs, att, zo, h, n2, inv2, u, g, zup, zdown;
  };
  std::vector<T> x0;
  std::vector<Block> blocks;
  std::vector<T> x_final, nf;
  T inv_final = 0;
  // Backward scratch.
  std::vector<T> dx, dh, dn, dq, dk, dv, datt, du, dg, dz, tmp;
};

extern template class AdapterModel<float>;
extern template class AdapterModel<double>;
extern template class Workspace<float>;
extern template class Workspace<double>;
extern template AdapterModel<double> AdapterModel<float>::cast<double>() const;
extern template AdapterModel<float> AdapterModel<double>::cast<float>() const;
extern template AdapterModel<float> AdapterModel<float>::cast<float>() const;
extern template AdapterModel<double> AdapterModel<double>::cast<double>() const;

}  // namespace verilm::adapter
