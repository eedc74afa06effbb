// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * Uncertainty estimation over parallel generations.
 *
 * Each of the M parallel decodes is reduced to a final answer, the answer is
 * canonicalized, and the share of the most frequent canonical answer is the
 * consensus level. Prompts whose consensus reaches the threshold tau take the
 * Short (direct answer) route; the rest take the Long (chain-of-thought) route.
 *
 * A second routing mode inspects one greedy output for reasoning markers
 * instead (contains_cot).
 */

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace egrm::consensus {

enum class Route { Short, Long };
enum class RouterMode { Consensus, ContainsCoT };

std::string_view to_string(Route r) noexcept;
std::string_view to_string(RouterMode m) noexcept;
Route route_from_string(std::string_view s);
RouterMode mode_from_string(std::string_view s);

struct CanonicalAnswer {
  std::string raw;
  std::string canonical;

  friend bool operator==(const CanonicalAnswer&, const CanonicalAnswer&) = default;
};

/// Text heuristics shared by answer extraction, ContainsCoT and the scorer
/// features. Configurable from the engine config file.
struct TextRules {
  std::string answer_delimiter = "Answer:";
  std::vector<std::string> cot_markers = {"step", "therefore", "let's think"};
  bool numbered_line_marker = true;  // a line starting with "1."
  std::uint64_t cot_token_threshold = 64;
  std::size_t cot_char_threshold = 400;
};

struct RouterConfig {
  std::size_t m = 5;
  double tau = 0.8;
  RouterMode mode = RouterMode::Consensus;

  /// Throws ConfigError unless m >= 2 and 0 < tau <= 1.
  void validate() const;
};

struct ConsensusReport {
  std::size_t m = 0;
  std::map<std::string, std::size_t> counts;  // canonical key -> occurrences
  double consensus = 0.0;
  std::string majority;
  std::optional<Route> route;

  std::size_t max_count() const noexcept;
};

/// Text after the last (case-insensitive) delimiter, trimmed; otherwise the
/// last nonempty line, trimmed. Empty input yields "".
std::string extract_final_answer(std::string_view text, const TextRules& rules = {});

CanonicalAnswer canonicalize(std::string_view raw);

/// Histogram + consensus level. Ties for the majority go to the
/// lexicographically smallest canonical key. Throws UsageError when empty.
ConsensusReport compute_consensus(const std::vector<CanonicalAnswer>& answers);

/// Short iff consensus >= tau. Throws ConfigError when report.m != config.m.
Route route(const ConsensusReport& report, const RouterConfig& config);

/// Reasoning-marker or length test on a single output. token_count, when
/// known, is compared against the token threshold; otherwise characters are.
bool contains_cot(std::string_view text, const TextRules& rules = {},
                  std::optional<std::uint64_t> token_count = std::nullopt);

// Small string helpers reused by the scorer features.
std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s) noexcept;
std::size_t count_occurrences_ci(std::string_view haystack, std::string_view needle);

}  // namespace egrm::consensus
