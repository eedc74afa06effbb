// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include <benchmark/benchmark.h>

#include "egrm/scorer.hpp"
#include "egrm/synthetic.hpp"

namespace {

using namespace egrm;

const scorer::ScoredBatch& batch() {
  static const auto b = scorer::make_batch(synthetic::scored_dataset({}));
  return b;
}

void BM_FeatureExtraction(benchmark::State& state) {
  const std::string response = "Step 1: 12 + 30 = 42\nStep 2: check the sum\nAnswer: 42";
  for (auto _ : state) benchmark::DoNotOptimize(scorer::extract_features("What is 12 plus 30?", response));
}
BENCHMARK(BM_FeatureExtraction);

void BM_ScoreOne(benchmark::State& state) {
  const auto model = scorer::ScorerModel::initialized(scorer::kDefaultDim, scorer::kDefaultHidden, 43);
  const auto& f = batch().features.front();
  for (auto _ : state) benchmark::DoNotOptimize(model.score(f));
}
BENCHMARK(BM_ScoreOne);

void BM_HybridLossGradient(benchmark::State& state) {
  const auto model = scorer::ScorerModel::initialized(scorer::kDefaultDim, scorer::kDefaultHidden, 43);
  for (auto _ : state) benchmark::DoNotOptimize(scorer::gradient(model, batch(), {}));
}
BENCHMARK(BM_HybridLossGradient)->Unit(benchmark::kMillisecond);

}  // namespace
