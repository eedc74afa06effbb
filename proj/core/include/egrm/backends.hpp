// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "egrm/types.hpp"

namespace egrm::backends {

enum class BackendKind { Scripted, Http };

struct BackendDescriptor {
  BackendKind kind = BackendKind::Scripted;
  std::optional<std::string> endpoint;  // e.g. http://127.0.0.1:8000/v1
  std::optional<std::string> model_name;
  std::uint32_t timeout_ms = 30000;

  void validate() const;
};

/// A transport-level failure of one generation request.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, std::size_t slot)
      : Error(what), status_(status), slot_(slot) {}
  int status() const noexcept { return status_; }
  std::size_t slot() const noexcept { return slot_; }

 private:
  int status_;  // HTTP status, or -1 when no response was received
  std::size_t slot_;
};

/// Anything that turns (prompt, decode params) into text. Implementations
/// must tolerate concurrent generate() calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResult generate(const Prompt& prompt, const DecodeParams& params,
                                    std::size_t slot) = 0;
};

// ----------------------------------------------------------------------------
// Scripted backend
// ----------------------------------------------------------------------------

struct ScriptEntry {
  std::string text;
  std::uint64_t tokens = 0;

  friend bool operator==(const ScriptEntry&, const ScriptEntry&) = default;
};

/// Deterministic response table addressed by (prompt id, slot index).
/// Parallel probes use slots [0, M); candidates use [M, M + K).
class Script {
 public:
  using Key = std::pair<std::string, std::size_t>;

  Script() = default;
  Script(std::string default_text, std::map<Key, ScriptEntry> entries);

  /// {"default": "...", "entries": [{"prompt_id", "slot", "text", "tokens"?}]}
  /// A missing "tokens" field counts whitespace-separated words.
  static Script from_json(const nlohmann::json& doc);
  static Script load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  ScriptEntry lookup(const std::string& prompt_id, std::size_t slot) const;

  /// Throws ConfigError if any entry's slot is outside [0, slot_limit).
  void check_slots(std::size_t slot_limit) const;

  void set(const std::string& prompt_id, std::size_t slot, std::string text,
           std::optional<std::uint64_t> tokens = std::nullopt);

  const std::map<Key, ScriptEntry>& entries() const noexcept { return entries_; }
  const std::string& default_text() const noexcept { return default_text_; }

 private:
  std::string default_text_;
  std::map<Key, ScriptEntry> entries_;
};

std::uint64_t whitespace_token_count(const std::string& text);

class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}
  GenerationResult generate(const Prompt& prompt, const DecodeParams& params,
                            std::size_t slot) override;
  const Script& script() const noexcept { return script_; }

 private:
  Script script_;
};

// ----------------------------------------------------------------------------
// OpenAI-compatible HTTP backend
// ----------------------------------------------------------------------------

/// POSTs {endpoint}/chat/completions and reads choices[0].message.content and
/// usage.completion_tokens. Only plain http:// endpoints are supported.
class HttpBackend final : public Backend {
 public:
  HttpBackend(BackendDescriptor descriptor, std::optional<std::string> api_key);

  /// Reads the bearer token from EGRM_API_KEY when set.
  static std::unique_ptr<HttpBackend> from_environment(BackendDescriptor descriptor);

  GenerationResult generate(const Prompt& prompt, const DecodeParams& params,
                            std::size_t slot) override;

  /// Request body for one completion; exposed for tests.
  static nlohmann::json request_body(const std::optional<std::string>& model,
                                     const Prompt& prompt, const DecodeParams& params);

 private:
  BackendDescriptor descriptor_;
  std::optional<std::string> api_key_;
  std::string host_;  // scheme://host[:port]
  std::string base_path_;
};

// ----------------------------------------------------------------------------
// Decode schedules and concurrent fan-out
// ----------------------------------------------------------------------------

class DecodeSchedule {
 public:
  /// Throws ConfigError when empty or when two entries share
  /// (temperature, top_p, seed).
  explicit DecodeSchedule(std::vector<DecodeParams> entries);

  const std::vector<DecodeParams>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const DecodeParams& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::vector<DecodeParams> entries_;
};

struct ScheduleRanges {
  double parallel_temp_lo = 0.3;
  double parallel_temp_hi = 1.1;
  double parallel_top_p = 0.95;
  std::uint32_t parallel_max_tokens = 256;
  double candidate_temp_lo = 0.5;
  double candidate_temp_hi = 1.2;
  std::vector<double> candidate_top_p = {0.9, 0.95};
  std::uint32_t candidate_max_tokens = 1024;
  std::uint64_t first_seed = 43;
};

struct Schedules {
  DecodeSchedule parallel;
  DecodeSchedule candidates;
};

/// Parallel temperatures evenly spaced over the parallel range; candidate
/// temperatures evenly spaced over the candidate range crossed with the
/// candidate top_p values, truncated to k. Seeds run first_seed, first_seed+1,
/// ... across both schedules. Throws ConfigError for m < 2 or k < 1.
Schedules default_schedules(std::size_t m, std::size_t k, const ScheduleRanges& ranges = {});

struct SlotError {
  std::size_t slot = 0;
  int status = -1;
  std::string message;
};

struct SlotOutcome {
  std::size_t slot = 0;
  std::variant<GenerationResult, SlotError> value;

  bool ok() const noexcept { return std::holds_alternative<GenerationResult>(value); }
  const GenerationResult& result() const { return std::get<GenerationResult>(value); }
  const SlotError& error() const { return std::get<SlotError>(value); }
};

/// Every slot of a fan-out failed.
class FanOutError : public Error {
 public:
  explicit FanOutError(std::vector<SlotError> causes);
  const std::vector<SlotError>& causes() const noexcept { return causes_; }

 private:
  std::vector<SlotError> causes_;
};

struct FanOutOptions {
  std::size_t max_in_flight = 8;
  std::size_t retries = 0;      // extra attempts per slot, at most 1 is typical
  std::size_t slot_offset = 0;  // slot index of schedule entry 0
};

/// Issues one generate() per schedule entry concurrently (bounded by
/// max_in_flight) and returns outcomes in schedule order. Failed slots are kept
/// in place as SlotError. Adds schedule.size() backend calls and the tokens of
/// successful slots to `metrics`. Throws FanOutError if no slot succeeds.
std::vector<SlotOutcome> fan_out(Backend& backend, const Prompt& prompt,
                                 const DecodeSchedule& schedule, RunMetrics& metrics,
                                 const FanOutOptions& options = {});

}  // namespace egrm::backends
