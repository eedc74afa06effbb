// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace egrm {

// ============================================================================
// Error hierarchy
// ============================================================================

/// Base for every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (bad dimensions, out-of-vocab token, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is inconsistent or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A domain value failed its invariant at construction.
class InvalidValue : public Error {
 public:
  using Error::Error;
};

/// Optimization produced a non-finite value.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// ============================================================================
// Domain types
// ============================================================================

class Prompt {
 public:
  Prompt(std::string id, std::string text,
         std::optional<std::string> ground_truth = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  const std::string& text() const noexcept { return text_; }
  const std::optional<std::string>& ground_truth() const noexcept { return ground_truth_; }

 private:
  std::string id_;
  std::string text_;
  std::optional<std::string> ground_truth_;
};

class DecodeParams {
 public:
  DecodeParams(double temperature, double top_p, std::uint32_t max_tokens,
               std::uint64_t seed);

  double temperature() const noexcept { return temperature_; }
  double top_p() const noexcept { return top_p_; }
  std::uint32_t max_tokens() const noexcept { return max_tokens_; }
  std::uint64_t seed() const noexcept { return seed_; }

  friend bool operator==(const DecodeParams&, const DecodeParams&) = default;

 private:
  double temperature_;
  double top_p_;
  std::uint32_t max_tokens_;
  std::uint64_t seed_;
};

class GenerationResult {
 public:
  // token_count must be 0 exactly when text is empty.
  GenerationResult(std::string prompt_id, DecodeParams params, std::string text,
                   std::uint64_t token_count, double latency_ms);

  const std::string& prompt_id() const noexcept { return prompt_id_; }
  const DecodeParams& params() const noexcept { return params_; }
  const std::string& text() const noexcept { return text_; }
  std::uint64_t token_count() const noexcept { return token_count_; }
  double latency_ms() const noexcept { return latency_ms_; }

 private:
  std::string prompt_id_;
  DecodeParams params_;
  std::string text_;
  std::uint64_t token_count_;
  double latency_ms_;
};

class ScoredSample {
 public:
  ScoredSample(Prompt prompt, std::string response, double reference_quality);

  const Prompt& prompt() const noexcept { return prompt_; }
  const std::string& response() const noexcept { return response_; }
  double reference_quality() const noexcept { return reference_quality_; }

 private:
  Prompt prompt_;
  std::string response_;
  double reference_quality_;
};

class PreferencePair {
 public:
  PreferencePair(Prompt prompt, std::string preferred, std::string dispreferred);

  const Prompt& prompt() const noexcept { return prompt_; }
  const std::string& preferred() const noexcept { return preferred_; }
  const std::string& dispreferred() const noexcept { return dispreferred_; }

 private:
  Prompt prompt_;
  std::string preferred_;
  std::string dispreferred_;
};

/// Running cost counters. Fields only ever grow.
class RunMetrics {
 public:
  std::uint64_t backend_calls() const noexcept { return backend_calls_; }
  std::uint64_t generated_tokens() const noexcept { return generated_tokens_; }
  double wall_ms() const noexcept { return wall_ms_; }

  void add_calls(std::uint64_t n) noexcept { backend_calls_ += n; }
  void add_tokens(std::uint64_t n) noexcept { generated_tokens_ += n; }
  void add_wall_ms(double ms);
  void merge(const RunMetrics& other);

 private:
  std::uint64_t backend_calls_ = 0;
  std::uint64_t generated_tokens_ = 0;
  double wall_ms_ = 0.0;
};

// ============================================================================
// Dataset validation
// ============================================================================

/// A scored-sample line as parsed from disk, before invariants are checked.
/// Records sharing `id` form one prompt's response group.
struct RawScoredRecord {
  std::string id;
  std::string prompt;
  std::string response;
  double q = 0.0;
};

/// A preference-pair line as parsed from disk. `id` is unique per file.
struct RawPairRecord {
  std::string id;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  std::optional<std::string> answer;
};

using RawRecord = std::variant<RawScoredRecord, RawPairRecord>;

struct ValidationIssue {
  std::size_t index;
  std::string message;
};

struct ValidationReport {
  std::size_t ok = 0;
  std::vector<ValidationIssue> errors;

  bool valid() const noexcept { return errors.empty(); }
};

/// Checks every record against the domain invariants and reports each
/// violation with its record index. Never throws on bad data.
ValidationReport validate_dataset(const std::vector<RawRecord>& records);

/// Converts validated raw records into domain values. Throws InvalidValue on
/// the first violation; run validate_dataset first for a full report.
std::vector<ScoredSample> to_scored_samples(const std::vector<RawScoredRecord>& records);
std::vector<PreferencePair> to_preference_pairs(const std::vector<RawPairRecord>& records);

}  // namespace egrm
