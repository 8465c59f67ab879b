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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace verilm::adapter {

struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;       // into the value vector
  bool trainable = false;
  std::size_t grad_offset = 0;  // into the compact gradient; meaningless when frozen

  std::size_t size() const { return rows * cols; }
};

/// Named row-major tensors in one flat buffer, partitioned into frozen and
/// trainable. Gradients live in a compact buffer holding trainable tensors only.
template <class T>
class ParameterSet {
 public:
  using Id = std::size_t;

  Id add(std::string name, std::size_t rows, std::size_t cols, bool trainable);

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& info(Id id) const { return tensors_[id]; }
  /// Throws std::out_of_range for an unknown name.
  Id find(std::string_view name) const;

  std::span<T> values(Id id) { return {values_.data() + tensors_[id].offset, tensors_[id].size()}; }
  std::span<const T> values(Id id) const {
    return {values_.data() + tensors_[id].offset, tensors_[id].size()};
  }
  std::span<T> flat() { return values_; }
  std::span<const T> flat() const { return values_; }

  /// Gradient slice of a trainable tensor; empty for frozen ones.
  std::span<T> grad(std::span<T> grads, Id id) const;
  std::span<const T> grad(std::span<const T> grads, Id id) const;

  std::size_t size() const { return values_.size(); }
  std::size_t n_trainable() const { return n_trainable_; }
  std::size_t n_frozen() const { return values_.size() - n_trainable_; }

  /// FNV-1a over the bytes of every frozen tensor, in declaration order.
  std::string frozen_hash() const;

 private:
  std::vector<TensorInfo> tensors_;
  std::vector<T> values_;
  std::size_t n_trainable_ = 0;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace verilm::adapter
