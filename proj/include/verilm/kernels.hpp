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

// Data-parallel loops. Every kernel has a serial reference path and an
// OpenMP path selected by `Exec`; both produce bit-identical results because
// reductions always run in a fixed order.

#include <cstddef>
#include <span>
#include <utility>

namespace verilm::kernels {

enum class Exec { serial, parallel };

int max_threads();

template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::parallel) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

double cosine(std::span<const float> a, std::span<const float> b);

/// out[k] = cosine(rows[pairs[k].first], rows[pairs[k].second]) over a
/// row-major matrix with `dim` columns.
void batch_cosine(std::span<const float> rows, std::size_t dim,
                  std::span<const std::pair<std::size_t, std::size_t>> pairs,
                  std::span<double> out, Exec exec);

/// out[p] = sum over s of rows[s * width + p], summed in increasing s.
/// Parallel over p so the per-element summation order never changes.
template <class T>
void sum_rows_ordered(std::span<const T> rows, std::size_t n_rows, std::span<T> out, Exec exec) {
  const std::size_t width = out.size();
  auto column = [&](std::size_t p) {
    T acc = T(0);
    for (std::size_t s = 0; s < n_rows; ++s) acc += rows[s * width + p];
    out[p] = acc;
  };
  for_each_index(width, exec, column);
}

}  // namespace verilm::kernels
