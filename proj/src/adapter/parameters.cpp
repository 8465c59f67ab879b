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

#include "verilm/adapter/parameters.hpp"

#include <stdexcept>

#include "verilm/hash.hpp"

namespace verilm::adapter {

template <class T>
typename ParameterSet<T>::Id ParameterSet<T>::add(std::string name, std::size_t rows,
                                                  std::size_t cols, bool trainable) {
  TensorInfo info;
  info.name = std::move(name);
  info.rows = rows;
  info.cols = cols;
  info.offset = values_.size();
  info.trainable = trainable;
  if (trainable) {
    info.grad_offset = n_trainable_;
    n_trainable_ += rows * cols;
  }
  values_.resize(values_.size() + rows * cols, T(0));
  tensors_.push_back(std::move(info));
  return tensors_.size() - 1;
}

template <class T>
typename ParameterSet<T>::Id ParameterSet<T>::find(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name == name) return i;
  throw std::out_of_range("no tensor named '" + std::string(name) + "'");
}

template <class T>
std::span<T> ParameterSet<T>::grad(std::span<T> grads, Id id) const {
  const auto& t = tensors_[id];
  if (!t.trainable) return {};
  return grads.subspan(t.grad_offset, t.size());
}

template <class T>
std::span<const T> ParameterSet<T>::grad(std::span<const T> grads, Id id) const {
  const auto& t = tensors_[id];
  if (!t.trainable) return {};
  return grads.subspan(t.grad_offset, t.size());
}

template <class T>
std::string ParameterSet<T>::frozen_hash() const {
  Fnv1a64 h;
  for (const auto& t : tensors_) {
    if (t.trainable) continue;
    h.update(t.name);
    h.update(std::as_bytes(std::span<const T>(values_.data() + t.offset, t.size())));
  }
  return h.hex();
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace verilm::adapter
