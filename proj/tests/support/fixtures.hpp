// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "egrm/backends.hpp"
#include "egrm/rewards.hpp"
#include "egrm/scorer.hpp"
#include "egrm/types.hpp"

namespace egrm::test {

/// Scripted corpus for routing tests. Prompt i is unanimous when the even
/// spread of `unanimous` over `n` marks it; the others get 2-way to 5-way
/// splits (consensus <= 0.6). Slots [m, m + k) hold candidates with distinct
/// step counts.
struct RoutingCorpus {
  std::vector<Prompt> prompts;
  backends::Script script;
  std::vector<bool> is_unanimous;
};

RoutingCorpus make_routing_corpus(std::size_t n = 100, std::size_t unanimous = 58, std::size_t m = 5,
                                  std::size_t k = 8);

/// Random scorer, 32-sample batch (4 prompt groups) with features in [-1, 1]
/// and qualities in [0, 1].
struct ScorerCase {
  scorer::ScorerModel model;
  scorer::ScoredBatch batch;
};

ScorerCase scorer_case(std::uint64_t seed, std::size_t d = 16, std::size_t batch = 32);

/// Current, old and reference policies plus a group and a pair for the GRPO
/// objectives.
struct GrpoCase {
  rewards::ToyPolicy policy;
  rewards::ToyPolicy old_policy;
  rewards::ToyPolicy ref_policy;
  std::size_t prompt = 0;
  std::vector<rewards::Tokens> group;
  std::vector<double> advantages;
  rewards::TokenPair pair;
  double scorer_plus = 0.0;
  double scorer_minus = 0.0;
};

GrpoCase grpo_case(std::uint64_t seed);

/// Writes a scored dataset, config and script into `dir` for CLI tests and
/// returns the config path.
std::filesystem::path write_cli_fixture(const std::filesystem::path& dir, const RoutingCorpus& corpus,
                                        std::uint64_t scorer_seed = 43);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);

}  // namespace egrm::test
