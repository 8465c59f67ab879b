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

#include "verilm/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include <omp.h>

namespace verilm::kernels {

int max_threads() { return omp_get_max_threads(); }

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

void batch_cosine(std::span<const float> rows, std::size_t dim,
                  std::span<const std::pair<std::size_t, std::size_t>> pairs,
                  std::span<double> out, Exec exec) {
  if (out.size() != pairs.size()) throw std::invalid_argument("batch_cosine: size mismatch");
  for_each_index(pairs.size(), exec, [&](std::size_t k) {
    auto [i, j] = pairs[k];
    out[k] = cosine(rows.subspan(i * dim, dim), rows.subspan(j * dim, dim));
  });
}

}  // namespace verilm::kernels
