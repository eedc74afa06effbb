// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * End-to-end routing inference, SFT data partitioning and judgment parsing.
 *
 * infer() runs one prompt through: M probe decodes, consensus and routing,
 * then (Long route only) K candidate decodes scored by the scorer, keeping the
 * argmax candidate. run_batch() applies it to a prompt list and aggregates
 * call/token accounting.
 */

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "egrm/backends.hpp"
#include "egrm/consensus.hpp"
#include "egrm/rewards.hpp"
#include "egrm/scorer.hpp"
#include "egrm/types.hpp"

namespace egrm::pipeline {

struct PromptError {
  std::string prompt_id;
  std::string message;
  std::vector<backends::SlotError> causes;
};

// ----------------------------------------------------------------------------
// Inference
// ----------------------------------------------------------------------------

struct Candidate {
  std::string text;
  double score = 0.0;
};

struct InferenceOutcome {
  std::string prompt_id;
  consensus::Route route = consensus::Route::Short;
  std::string answer;  // canonical
  std::vector<Candidate> candidates;
  std::optional<std::size_t> chosen_index;
  std::optional<consensus::ConsensusReport> consensus_report;  // absent in ContainsCoT mode
  RunMetrics metrics;
};

struct InferOptions {
  consensus::TextRules rules{};
  backends::FanOutOptions fan_out{};
  std::size_t feature_dim = scorer::kDefaultDim;
  bool forced_cot = false;
};

/// Index of the largest score, lowest index on ties. Throws UsageError when
/// empty.
std::size_t select_best(const std::vector<double>& scores);

/// Greedy decode used by the ContainsCoT router.
DecodeParams greedy_params(const backends::Schedules& schedules);

/// Throws FanOutError when every probe or every candidate fails, ConfigError
/// when the scorer dimension does not match options.feature_dim.
InferenceOutcome infer(const Prompt& prompt, backends::Backend& backend,
                       const consensus::RouterConfig& router, const scorer::ScorerModel& model,
                       const backends::Schedules& schedules, const InferOptions& options = {});

struct BatchSummary {
  std::size_t n = 0;
  double short_fraction = 0.0;
  std::uint64_t calls = 0;
  std::uint64_t tokens = 0;
  double wall_ms = 0.0;
};

struct BatchReport {
  BatchSummary summary;
  std::vector<InferenceOutcome> outcomes;  // input order, failed prompts omitted
  std::vector<PromptError> errors;
};

struct BatchOptions {
  InferOptions infer{};
  std::size_t parallel_prompts = 1;
};

/// Per-prompt failures are collected in `errors`; the batch continues.
BatchReport run_batch(const std::vector<Prompt>& prompts, backends::Backend& backend,
                      const consensus::RouterConfig& router, const scorer::ScorerModel& model,
                      const backends::Schedules& schedules, const BatchOptions& options = {});

nlohmann::json to_json(const consensus::ConsensusReport& report);
nlohmann::json to_json(const InferenceOutcome& outcome);
nlohmann::json to_json(const PromptError& error);
/// {"summary": {n, short_fraction, calls, tokens, wall_ms}, "outcomes": [...], "errors": [...]}
nlohmann::json to_json(const BatchReport& report);

// ----------------------------------------------------------------------------
// SFT partition
// ----------------------------------------------------------------------------

struct ShortEntry {
  Prompt prompt;
  std::string answer;
};

struct LongEntry {
  Prompt prompt;
  std::string chain;
  std::string answer;
};

struct PromptReport {
  std::string prompt_id;
  consensus::ConsensusReport report;
};

struct SftPartition {
  std::vector<ShortEntry> short_set;
  std::vector<LongEntry> long_set;
  std::vector<PromptReport> reports;  // one per non-errored prompt, input order
  std::vector<PromptError> errors;
  RunMetrics metrics;
};

struct PartitionOptions {
  consensus::TextRules rules{};
  backends::FanOutOptions fan_out{};
  DecodeParams teacher_params{0.0, 1.0, 1024, 43};
};

/// Routes every prompt by consensus over the parallel schedule. Long chains
/// come from `teacher` when given, otherwise from the longest probe that
/// contains reasoning markers (the longest probe when none does; lowest slot
/// on ties).
SftPartition partition_sft(const std::vector<Prompt>& prompts, backends::Backend& backend,
                           const consensus::RouterConfig& router,
                           const backends::DecodeSchedule& parallel,
                           backends::Backend* teacher = nullptr,
                           const PartitionOptions& options = {});

/// Hash tokenizer mapping whitespace-separated words (ASCII-lowercased) into
/// the toy vocabulary and prompt ids onto prompt contexts.
class ToyTokenizer {
 public:
  ToyTokenizer(std::size_t vocab, std::size_t prompts);

  std::size_t prompt_context(std::string_view prompt_id) const;
  rewards::Tokens encode(std::string_view text, std::size_t max_len) const;

 private:
  std::size_t vocab_;
  std::size_t prompts_;
};

struct TokenizedSample {
  std::size_t prompt = 0;
  rewards::Tokens tokens;
};

struct TokenizedSft {
  std::vector<TokenizedSample> short_set;  // answer tokens
  std::vector<TokenizedSample> long_set;   // chain then answer tokens
};

/// Long samples keep the first max_len tokens of "chain answer".
TokenizedSft tokenize(const SftPartition& partition, const ToyTokenizer& tokenizer,
                      std::size_t max_len);

struct SftLosses {
  double short_loss = 0.0;
  double long_loss = 0.0;
  double total = 0.0;  // short_loss + long_loss
};

/// Negative sequence log-likelihood sums. Out-of-vocab tokens throw UsageError.
SftLosses sft_losses(const rewards::ToyPolicy& policy, const TokenizedSft& data);

// ----------------------------------------------------------------------------
// Judgment output
// ----------------------------------------------------------------------------

enum class Verdict { Yes, No };

struct JudgmentParse {
  std::optional<int> score;  // 1..10
  std::optional<Verdict> verdict;

  friend bool operator==(const JudgmentParse&, const JudgmentParse&) = default;
};

/// Never throws. Tags are matched case-insensitively; a field is present only
/// when both its opening and closing tag exist.
JudgmentParse parse_judgment(std::string_view text) noexcept;

/// Replaces "{question}" and "{response}" in the template.
std::string fill_judge_template(std::string_view tmpl, std::string_view question,
                                std::string_view response);

/// Judge template shipped with the library (build tree or install prefix).
std::string default_judge_template();

}  // namespace egrm::pipeline
