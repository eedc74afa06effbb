// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "egrm/random.hpp"

namespace egrm::test {

namespace fs = std::filesystem;

RoutingCorpus make_routing_corpus(std::size_t n, std::size_t unanimous, std::size_t m, std::size_t k) {
  RoutingCorpus c;
  c.script = backends::Script("Answer: none", {});
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "c" + std::to_string(1000 + i).substr(1);
    c.prompts.emplace_back(id, "Question " + std::to_string(i) + ": what is " + std::to_string(i) + " plus " +
                                   std::to_string(2 * i) + "?");
    const bool same = (i * unanimous) / n != ((i + 1) * unanimous) / n;
    c.is_unanimous.push_back(same);
    for (std::size_t s = 0; s < m; ++s) {
      std::size_t answer = 3 * i;
      if (!same) {
        switch (i % 3) {
          case 0: answer += s; break;             // all distinct
          case 1: answer += s % 2; break;         // 3 / 2 split
          default: answer += s / 2; break;        // 2 / 2 / 1 split
        }
      }
      c.script.set(id, s, "Answer: " + std::to_string(answer), 2);
    }
    for (std::size_t j = 0; j < k; ++j) {
      std::string text;
      const std::size_t steps = 1 + (i + j * 3) % 5;
      for (std::size_t t = 0; t < steps; ++t)
        text += "Step " + std::to_string(t + 1) + ": add " + std::to_string(i) + " and " + std::to_string(2 * i) + "\n";
      text += "Answer: " + std::to_string(3 * i + (j % 2));
      c.script.set(id, m + j, text, 10 * steps + 2);
    }
  }
  return c;
}

ScorerCase scorer_case(std::uint64_t seed, std::size_t d, std::size_t batch) {
  Rng rng(seed);
  ScorerCase c{scorer::ScorerModel::initialized(d, scorer::kDefaultHidden, seed), {}};
  for (auto& p : c.model.params()) p *= 3.0;  // push hidden units off the linear regime
  for (std::size_t i = 0; i < batch; ++i) {
    scorer::FeatureVector f;
    for (std::size_t j = 0; j < d; ++j) f.values.push_back(rng.uniform(-1.0, 1.0));
    c.batch.features.push_back(std::move(f));
    c.batch.q.push_back(rng.uniform01());
    c.batch.group.push_back(i % 4);
  }
  return c;
}

GrpoCase grpo_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t vocab = 8, len = 4, prompts = 3;
  GrpoCase c{rewards::ToyPolicy::random(vocab, len, prompts, seed, 1.0),
             rewards::ToyPolicy(vocab, len, prompts), rewards::ToyPolicy::random(vocab, len, prompts, seed + 1000, 1.0)};
  c.old_policy = c.policy;
  for (auto& l : c.old_policy.params()) l += rng.uniform(-0.3, 0.3);
  c.prompt = rng.below(prompts);
  for (std::size_t g = 0; g < 8; ++g) {
    rewards::Tokens t;
    const std::size_t n = 1 + rng.below(len);
    for (std::size_t i = 0; i < n; ++i) t.push_back(rng.below(vocab));
    c.group.push_back(std::move(t));
    c.advantages.push_back(rng.uniform(-1.5, 1.5));
  }
  c.pair.prompt = c.prompt;
  for (std::size_t i = 0; i < len; ++i) {
    c.pair.preferred.push_back(rng.below(vocab));
    c.pair.dispreferred.push_back(rng.below(vocab));
  }
  c.pair.dispreferred[0] = (c.pair.preferred[0] + 1) % vocab;
  c.scorer_plus = rng.uniform(0.5, 0.95);
  c.scorer_minus = rng.uniform(0.05, 0.5);
  return c;
}

fs::path write_cli_fixture(const fs::path& dir, const RoutingCorpus& corpus, std::uint64_t scorer_seed) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "prompts.jsonl");
    for (const auto& p : corpus.prompts) out << nlohmann::json{{"id", p.id()}, {"text", p.text()}}.dump() << "\n";
  }
  {
    std::ofstream out(dir / "script.json");
    out << corpus.script.to_json().dump(1);
  }
  scorer::ScorerModel::initialized(scorer::kDefaultDim, scorer::kDefaultHidden, scorer_seed).save(dir / "scorer.txt");
  const nlohmann::json cfg = {
      {"defaults", {{"m", 5}, {"tau", 0.8}, {"k", 8}, {"seed", 43}}},
      {"backend", {{"kind", "scripted"}, {"script", "script.json"}}},
      {"scorer", {{"model", "scorer.txt"}, {"steps", 200}}},
      {"grpo", {{"steps", 60}}},
      {"concurrency", {{"max_in_flight", 4}, {"parallel_prompts", 3}}},
  };
  std::ofstream out(dir / "config.json");
  out << cfg.dump(2);
  return dir / "config.json";
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("egrm-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace egrm::test
