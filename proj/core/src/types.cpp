// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/types.hpp"

#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace egrm {

Prompt::Prompt(std::string id, std::string text, std::optional<std::string> ground_truth)
    : id_(std::move(id)), text_(std::move(text)), ground_truth_(std::move(ground_truth)) {
  if (id_.empty()) throw InvalidValue("prompt id must be nonempty");
  if (text_.empty()) throw InvalidValue("prompt '" + id_ + "': text must be nonempty");
}

DecodeParams::DecodeParams(double temperature, double top_p, std::uint32_t max_tokens,
                           std::uint64_t seed)
    : temperature_(temperature), top_p_(top_p), max_tokens_(max_tokens), seed_(seed) {
  if (!(temperature_ >= 0.0) || !std::isfinite(temperature_))
    throw InvalidValue("temperature must be finite and >= 0");
  if (!(top_p_ > 0.0 && top_p_ <= 1.0)) throw InvalidValue("top_p must lie in (0, 1]");
  if (max_tokens_ == 0) throw InvalidValue("max_tokens must be positive");
}

GenerationResult::GenerationResult(std::string prompt_id, DecodeParams params, std::string text,
                                   std::uint64_t token_count, double latency_ms)
    : prompt_id_(std::move(prompt_id)),
      params_(params),
      text_(std::move(text)),
      token_count_(token_count),
      latency_ms_(latency_ms) {
  if ((token_count_ == 0) != text_.empty())
    throw InvalidValue("generation for '" + prompt_id_ +
                       "': token_count must be 0 exactly when text is empty");
  if (!(latency_ms_ >= 0.0)) throw InvalidValue("latency_ms must be >= 0");
}

ScoredSample::ScoredSample(Prompt prompt, std::string response, double reference_quality)
    : prompt_(std::move(prompt)), response_(std::move(response)), reference_quality_(reference_quality) {
  if (!(reference_quality_ >= 0.0 && reference_quality_ <= 1.0))
    throw InvalidValue("quality out of range");
}

PreferencePair::PreferencePair(Prompt prompt, std::string preferred, std::string dispreferred)
    : prompt_(std::move(prompt)), preferred_(std::move(preferred)), dispreferred_(std::move(dispreferred)) {
  if (preferred_ == dispreferred_) throw InvalidValue("degenerate pair");
}

void RunMetrics::add_wall_ms(double ms) {
  if (!(ms >= 0.0)) throw UsageError("wall time increments must be >= 0");
  wall_ms_ += ms;
}

void RunMetrics::merge(const RunMetrics& other) {
  backend_calls_ += other.backend_calls_;
  generated_tokens_ += other.generated_tokens_;
  wall_ms_ += other.wall_ms_;
}

namespace {

const std::string& prompt_text_or_id(const RawScoredRecord& r) {
  return r.prompt.empty() ? r.id : r.prompt;
}

}  // namespace

ValidationReport validate_dataset(const std::vector<RawRecord>& records) {
  ValidationReport report;
  std::set<std::pair<std::string, std::string>> seen_samples;
  std::map<std::string, std::string> sample_prompt_text;
  std::set<std::string> seen_pair_ids;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t before = report.errors.size();
    auto fail = [&](std::string msg) { report.errors.push_back({i, std::move(msg)}); };

    if (const auto* s = std::get_if<RawScoredRecord>(&records[i])) {
      if (s->id.empty()) fail("empty prompt id");
      if (!std::isfinite(s->q) || s->q < 0.0 || s->q > 1.0) fail("quality out of range");
      if (!seen_samples.emplace(s->id, s->response).second)
        fail("duplicate prompt id '" + s->id + "' with identical response");
      auto [it, inserted] = sample_prompt_text.emplace(s->id, prompt_text_or_id(*s));
      if (!inserted && it->second != prompt_text_or_id(*s))
        fail("conflicting prompt text for id '" + s->id + "'");
    } else {
      const auto& p = std::get<RawPairRecord>(records[i]);
      if (p.id.empty()) fail("empty prompt id");
      if (p.prompt.empty()) fail("empty prompt text");
      if (p.chosen == p.rejected) fail("degenerate pair");
      if (!p.id.empty() && !seen_pair_ids.insert(p.id).second)
        fail("duplicate prompt id '" + p.id + "'");
    }
    if (report.errors.size() == before) ++report.ok;
  }
  return report;
}

std::vector<ScoredSample> to_scored_samples(const std::vector<RawScoredRecord>& records) {
  std::vector<ScoredSample> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.emplace_back(Prompt(r.id, prompt_text_or_id(r)), r.response, r.q);
  return out;
}

std::vector<PreferencePair> to_preference_pairs(const std::vector<RawPairRecord>& records) {
  std::vector<PreferencePair> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.emplace_back(Prompt(r.id, r.prompt, r.answer), r.chosen, r.rejected);
  return out;
}

}  // namespace egrm
