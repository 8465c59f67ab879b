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

#include <random>
#include <utility>
#include <vector>

#include <benchmark/benchmark.h>

#include "verilm/adapter/trainer.hpp"
#include "verilm/embeddings.hpp"
#include "verilm/kernels.hpp"

namespace {

using namespace verilm;

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? kernels::Exec::serial : kernels::Exec::parallel;
}

void BM_BatchCosine(benchmark::State& state) {
  SynthConfig cfg;
  cfg.n_speakers = 500;
  std::mt19937_64 rng(1);
  auto pool = synth_speakers(cfg, rng);
  std::vector<std::pair<std::size_t, std::size_t>> pairs(std::size_t(state.range(1)));
  for (auto& p : pairs) p = {rng() % pool.embeddings.size(), rng() % pool.embeddings.size()};
  std::vector<double> out(pairs.size());
  for (auto _ : state) {
    kernels::batch_cosine(pool.embeddings.data(), cfg.dim, pairs, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(pairs.size()));
}
BENCHMARK(BM_BatchCosine)->ArgsProduct({{0, 1}, {10000, 100000}})->ArgNames({"parallel", "pairs"});

void BM_AdapterScoring(benchmark::State& state) {
  auto p = adapter::preset("full");
  p.train.n_speakers = 60;
  p.train.n_val_speakers = 100;
  auto test = adapter::make_test_data(p.train, p.model.d_spk);
  auto model = adapter::initial_model(p.model, 17);
  for (auto _ : state) {
    auto s = adapter::llr_scores(model, test.trials, test.pool.embeddings, exec_of(state));
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(test.trials.size()));
}
BENCHMARK(BM_AdapterScoring)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  auto p = adapter::preset("full");
  p.train.n_speakers = 100;
  p.train.n_val_speakers = 10;
  p.train.epochs = 1;
  p.train.exec = exec_of(state);
  auto data = adapter::make_training_data(p.train, p.model.d_spk);
  auto model = adapter::initial_model(p.model, 17);
  for (auto _ : state) {
    auto r = adapter::train(model, data, p.train);
    benchmark::DoNotOptimize(r.best_val_eer);
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(data.train.manifest.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
