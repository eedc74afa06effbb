// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "egrm/consensus.hpp"

namespace {

std::vector<std::string> responses(std::size_t bytes) {
  std::vector<std::string> out;
  for (int i = 0; i < 5; ++i) {
    std::string t;
    while (t.size() + 16 < bytes) t += "Step: add terms. ";
    t += "\nAnswer: " + std::to_string(40 + i % 2);
    out.push_back(std::move(t));
  }
  return out;
}

void BM_ExtractAndConsensus(benchmark::State& state) {
  const auto texts = responses(static_cast<std::size_t>(state.range(0)));
  egrm::consensus::RouterConfig cfg;
  for (auto _ : state) {
    std::vector<egrm::consensus::CanonicalAnswer> answers;
    for (const auto& t : texts) answers.push_back(egrm::consensus::canonicalize(egrm::consensus::extract_final_answer(t)));
    const auto report = egrm::consensus::compute_consensus(answers);
    benchmark::DoNotOptimize(egrm::consensus::route(report, cfg));
  }
}
BENCHMARK(BM_ExtractAndConsensus)->Arg(128)->Arg(1024)->Arg(8192);

void BM_ContainsCot(benchmark::State& state) {
  const auto texts = responses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(egrm::consensus::contains_cot(texts[0]));
}
BENCHMARK(BM_ContainsCot)->Arg(1024)->Arg(8192);

}  // namespace

BENCHMARK_MAIN();
