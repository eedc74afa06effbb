// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/backends.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace egrm::backends {

void BackendDescriptor::validate() const {
  if (timeout_ms == 0) throw ConfigError("backend: timeout_ms must be positive");
  if (kind == BackendKind::Http && (!endpoint || endpoint->empty()))
    throw ConfigError("backend: http backend requires an endpoint");
}

std::uint64_t whitespace_token_count(const std::string& text) {
  std::istringstream in(text);
  std::uint64_t n = 0;
  for (std::string word; in >> word;) ++n;
  // Whitespace-only text is still nonempty output.
  return (n == 0 && !text.empty()) ? 1 : n;
}

namespace {

void check_entry(const std::string& where, const ScriptEntry& e) {
  if ((e.tokens == 0) != e.text.empty())
    throw ConfigError("script " + where + ": tokens must be 0 exactly when text is empty");
}

}  // namespace

Script::Script(std::string default_text, std::map<Key, ScriptEntry> entries)
    : default_text_(std::move(default_text)), entries_(std::move(entries)) {
  for (const auto& [key, entry] : entries_)
    check_entry("entry (" + key.first + ", " + std::to_string(key.second) + ")", entry);
}

Script Script::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("script: top level must be an object");
  std::string default_text = doc.value("default", std::string{});
  std::map<Key, ScriptEntry> entries;
  if (doc.contains("entries")) {
    const auto& arr = doc.at("entries");
    if (!arr.is_array()) throw ConfigError("script: 'entries' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& e = arr[i];
      try {
        ScriptEntry entry;
        entry.text = e.at("text").get<std::string>();
        entry.tokens = e.contains("tokens") ? e.at("tokens").get<std::uint64_t>()
                                            : whitespace_token_count(entry.text);
        Key key{e.at("prompt_id").get<std::string>(), e.at("slot").get<std::size_t>()};
        if (!entries.emplace(std::move(key), std::move(entry)).second)
          throw ConfigError("duplicate (prompt_id, slot)");
      } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("script entry " + std::to_string(i) + ": " + ex.what());
      } catch (const ConfigError& ex) {
        throw ConfigError("script entry " + std::to_string(i) + ": " + ex.what());
      }
    }
  }
  return Script(std::move(default_text), std::move(entries));
}

Script Script::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open script file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError("script file " + path.string() + ": " + ex.what());
  }
}

nlohmann::json Script::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, e] : entries_)
    entries.push_back({{"prompt_id", key.first}, {"slot", key.second}, {"text", e.text}, {"tokens", e.tokens}});
  return {{"default", default_text_}, {"entries", std::move(entries)}};
}

ScriptEntry Script::lookup(const std::string& prompt_id, std::size_t slot) const {
  if (auto it = entries_.find({prompt_id, slot}); it != entries_.end()) return it->second;
  return {default_text_, default_text_.empty() ? 0 : whitespace_token_count(default_text_)};
}

void Script::check_slots(std::size_t slot_limit) const {
  for (const auto& [key, entry] : entries_) {
    if (key.second >= slot_limit)
      throw ConfigError("script entry (" + key.first + ", " + std::to_string(key.second) +
                        ") outside slot range [0, " + std::to_string(slot_limit) + ")");
  }
}

void Script::set(const std::string& prompt_id, std::size_t slot, std::string text,
                 std::optional<std::uint64_t> tokens) {
  ScriptEntry entry{std::move(text), 0};
  entry.tokens = tokens ? *tokens : (entry.text.empty() ? 0 : whitespace_token_count(entry.text));
  check_entry("entry (" + prompt_id + ", " + std::to_string(slot) + ")", entry);
  entries_[{prompt_id, slot}] = std::move(entry);
}

GenerationResult ScriptedBackend::generate(const Prompt& prompt, const DecodeParams& params,
                                           std::size_t slot) {
  auto entry = script_.lookup(prompt.id(), slot);
  return GenerationResult(prompt.id(), params, std::move(entry.text), entry.tokens, 0.0);
}

// ----------------------------------------------------------------------------

DecodeSchedule::DecodeSchedule(std::vector<DecodeParams> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ConfigError("decode schedule must be nonempty");
  std::set<std::tuple<double, double, std::uint64_t>> seen;
  for (const auto& p : entries_) {
    if (!seen.emplace(p.temperature(), p.top_p(), p.seed()).second)
      throw ConfigError("decode schedule entries must be pairwise distinct in (temperature, top_p, seed)");
  }
}

namespace {

std::vector<double> evenly_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::lerp(lo, hi, static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

}  // namespace

Schedules default_schedules(std::size_t m, std::size_t k, const ScheduleRanges& ranges) {
  if (m < 2) throw ConfigError("schedules: m must be >= 2 (consensus needs at least two samples)");
  if (k < 1) throw ConfigError("schedules: k must be >= 1");
  if (ranges.candidate_top_p.empty()) throw ConfigError("schedules: candidate_top_p is empty");

  std::uint64_t seed = ranges.first_seed;
  std::vector<DecodeParams> parallel;
  for (double t : evenly_spaced(ranges.parallel_temp_lo, ranges.parallel_temp_hi, m))
    parallel.emplace_back(t, ranges.parallel_top_p, ranges.parallel_max_tokens, seed++);

  const std::size_t n_top_p = ranges.candidate_top_p.size();
  const std::size_t n_temps = (k + n_top_p - 1) / n_top_p;
  std::vector<DecodeParams> candidates;
  for (double t : evenly_spaced(ranges.candidate_temp_lo, ranges.candidate_temp_hi, n_temps)) {
    for (double p : ranges.candidate_top_p) {
      if (candidates.size() == k) break;
      candidates.emplace_back(t, p, ranges.candidate_max_tokens, seed++);
    }
  }
  return {DecodeSchedule(std::move(parallel)), DecodeSchedule(std::move(candidates))};
}

// ----------------------------------------------------------------------------

namespace {

std::string describe_causes(const std::vector<SlotError>& causes) {
  std::string msg = "all " + std::to_string(causes.size()) + " slots failed:";
  for (const auto& c : causes)
    msg += " [slot " + std::to_string(c.slot) + " status " + std::to_string(c.status) + ": " + c.message + "]";
  return msg;
}

}  // namespace

FanOutError::FanOutError(std::vector<SlotError> causes)
    : Error(describe_causes(causes)), causes_(std::move(causes)) {}

std::vector<SlotOutcome> fan_out(Backend& backend, const Prompt& prompt,
                                 const DecodeSchedule& schedule, RunMetrics& metrics,
                                 const FanOutOptions& options) {
  const std::size_t n = schedule.size();
  std::vector<std::optional<SlotOutcome>> slots(n);

  auto run_slot = [&](std::size_t i) {
    const std::size_t slot = options.slot_offset + i;
    SlotError last{slot, -1, "not attempted"};
    for (std::size_t attempt = 0; attempt <= options.retries; ++attempt) {
      try {
        slots[i] = SlotOutcome{slot, backend.generate(prompt, schedule[i], slot)};
        return;
      } catch (const TransportError& ex) {
        last = {slot, ex.status(), ex.what()};
      } catch (const std::exception& ex) {
        last = {slot, -1, ex.what()};
      }
    }
    slots[i] = SlotOutcome{slot, last};
  };

  const std::size_t workers = std::clamp<std::size_t>(options.max_in_flight, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run_slot(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_slot(i);
      });
    }
  }  // jthreads join here

  std::vector<SlotOutcome> out;
  out.reserve(n);
  std::vector<SlotError> causes;
  for (auto& s : slots) {
    if (s->ok()) {
      metrics.add_tokens(s->result().token_count());
    } else {
      causes.push_back(s->error());
    }
    out.push_back(std::move(*s));
  }
  metrics.add_calls(n);
  if (causes.size() == n) throw FanOutError(std::move(causes));
  return out;
}

}  // namespace egrm::backends
