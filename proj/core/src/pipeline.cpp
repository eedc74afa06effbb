// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <thread>
#include <variant>

namespace egrm::pipeline {

using backends::Backend;
using backends::DecodeSchedule;
using backends::FanOutError;
using backends::SlotOutcome;
using consensus::Route;
using consensus::RouterMode;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string answer_of(std::string_view text, const consensus::TextRules& rules) {
  return consensus::canonicalize(consensus::extract_final_answer(text, rules)).canonical;
}

// Consensus over the successful probes, with failed probes counted as
// disagreeing votes (the denominator stays M).
consensus::ConsensusReport probe_consensus(const std::vector<SlotOutcome>& probes,
                                           const consensus::TextRules& rules) {
  std::vector<consensus::CanonicalAnswer> answers;
  for (const auto& p : probes)
    if (p.ok()) answers.push_back(consensus::canonicalize(consensus::extract_final_answer(p.result().text(), rules)));
  auto report = consensus::compute_consensus(answers);
  report.m = probes.size();
  report.consensus = static_cast<double>(report.max_count()) / static_cast<double>(report.m);
  return report;
}

void check_router(const consensus::RouterConfig& router, const DecodeSchedule& parallel) {
  router.validate();
  if (router.mode == RouterMode::Consensus && parallel.size() != router.m)
    throw ConfigError("parallel schedule has " + std::to_string(parallel.size()) +
                      " entries but the router expects m=" + std::to_string(router.m));
}

void check_scorer(const scorer::ScorerModel& model, std::size_t feature_dim) {
  if (model.d() != feature_dim)
    throw ConfigError("scorer expects " + std::to_string(model.d()) +
                      " features but the pipeline extracts " + std::to_string(feature_dim));
}

void infer_into(InferenceOutcome& out, const Prompt& prompt, Backend& backend,
                const consensus::RouterConfig& router, const scorer::ScorerModel& model,
                const backends::Schedules& schedules, const InferOptions& options) {
  const auto start = Clock::now();
  out.prompt_id = prompt.id();
  std::size_t candidate_offset = 0;

  if (router.mode == RouterMode::Consensus) {
    auto fo = options.fan_out;
    fo.slot_offset = 0;
    const auto probes = backends::fan_out(backend, prompt, schedules.parallel, out.metrics, fo);
    auto report = probe_consensus(probes, options.rules);
    const Route r = consensus::route(report, router);
    report.route = r;
    out.consensus_report = report;
    candidate_offset = schedules.parallel.size();
    if (r == Route::Short && !options.forced_cot) {
      out.route = Route::Short;
      out.answer = report.majority;
      out.metrics.add_wall_ms(elapsed_ms(start));
      return;
    }
  } else {
    candidate_offset = 1;
    if (!options.forced_cot) {
      auto fo = options.fan_out;
      fo.slot_offset = 0;
      const DecodeSchedule greedy({greedy_params(schedules)});
      const auto probe = backends::fan_out(backend, prompt, greedy, out.metrics, fo);
      const auto& g = probe.front().result();
      if (!consensus::contains_cot(g.text(), options.rules, g.token_count())) {
        out.route = Route::Short;
        out.answer = answer_of(g.text(), options.rules);
        out.metrics.add_wall_ms(elapsed_ms(start));
        return;
      }
    }
  }

  out.route = Route::Long;
  auto fo = options.fan_out;
  fo.slot_offset = candidate_offset;
  const auto generated = backends::fan_out(backend, prompt, schedules.candidates, out.metrics, fo);
  std::vector<double> scores;
  for (const auto& g : generated) {
    if (!g.ok()) continue;
    const auto f = scorer::extract_features(prompt.text(), g.result().text(), model.d(), options.rules);
    out.candidates.push_back({g.result().text(), model.score(f)});
    scores.push_back(out.candidates.back().score);
  }
  const std::size_t best = select_best(scores);
  out.chosen_index = best;
  out.answer = answer_of(out.candidates[best].text, options.rules);
  out.metrics.add_wall_ms(elapsed_ms(start));
}

PromptError prompt_error(const std::string& id, const std::exception& ex) {
  PromptError e{id, ex.what(), {}};
  if (const auto* fo = dynamic_cast<const FanOutError*>(&ex)) e.causes = fo->causes();
  return e;
}

}  // namespace

// ============================================================================
// Inference
// ============================================================================

std::size_t select_best(const std::vector<double>& scores) {
  if (scores.empty()) throw UsageError("select_best: no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

DecodeParams greedy_params(const backends::Schedules& schedules) {
  const auto& first = schedules.parallel[0];
  return DecodeParams(0.0, 1.0, first.max_tokens(), first.seed());
}

InferenceOutcome infer(const Prompt& prompt, Backend& backend,
                       const consensus::RouterConfig& router, const scorer::ScorerModel& model,
                       const backends::Schedules& schedules, const InferOptions& options) {
  check_router(router, schedules.parallel);
  check_scorer(model, options.feature_dim);
  InferenceOutcome out;
  infer_into(out, prompt, backend, router, model, schedules, options);
  return out;
}

BatchReport run_batch(const std::vector<Prompt>& prompts, Backend& backend,
                      const consensus::RouterConfig& router, const scorer::ScorerModel& model,
                      const backends::Schedules& schedules, const BatchOptions& options) {
  check_router(router, schedules.parallel);
  check_scorer(model, options.infer.feature_dim);
  const auto start = Clock::now();

  struct Slot {
    InferenceOutcome outcome;
    std::optional<PromptError> error;
  };
  std::vector<Slot> slots(prompts.size());

  auto run_one = [&](std::size_t i) {
    try {
      infer_into(slots[i].outcome, prompts[i], backend, router, model, schedules, options.infer);
    } catch (const std::exception& ex) {
      slots[i].error = prompt_error(prompts[i].id(), ex);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.parallel_prompts, 1, std::max<std::size_t>(prompts.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < prompts.size(); i = next.fetch_add(1)) run_one(i);
      });
  }

  BatchReport report;
  report.summary.n = prompts.size();
  std::size_t shorts = 0;
  for (auto& s : slots) {
    report.summary.calls += s.outcome.metrics.backend_calls();
    report.summary.tokens += s.outcome.metrics.generated_tokens();
    if (s.error) {
      report.errors.push_back(std::move(*s.error));
      continue;
    }
    if (s.outcome.route == Route::Short) ++shorts;
    report.outcomes.push_back(std::move(s.outcome));
  }
  if (!prompts.empty())
    report.summary.short_fraction = static_cast<double>(shorts) / static_cast<double>(prompts.size());
  report.summary.wall_ms = elapsed_ms(start);
  return report;
}

nlohmann::json to_json(const consensus::ConsensusReport& report) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [k, v] : report.counts) counts[k] = v;
  nlohmann::json j{{"m", report.m},
                   {"counts", counts},
                   {"consensus", report.consensus},
                   {"majority", report.majority}};
  j["route"] = report.route ? nlohmann::json(std::string(consensus::to_string(*report.route))) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const InferenceOutcome& o) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : o.candidates) candidates.push_back({{"text", c.text}, {"score", c.score}});
  nlohmann::json j{{"prompt_id", o.prompt_id},
                   {"route", std::string(consensus::to_string(o.route))},
                   {"answer", o.answer},
                   {"candidates", candidates}};
  j["chosen_index"] = o.chosen_index ? nlohmann::json(*o.chosen_index) : nlohmann::json();
  j["consensus"] = o.consensus_report ? to_json(*o.consensus_report) : nlohmann::json();
  j["calls"] = o.metrics.backend_calls();
  j["tokens"] = o.metrics.generated_tokens();
  return j;
}

nlohmann::json to_json(const PromptError& e) {
  nlohmann::json causes = nlohmann::json::array();
  for (const auto& c : e.causes)
    causes.push_back({{"slot", c.slot}, {"status", c.status}, {"message", c.message}});
  return {{"prompt_id", e.prompt_id}, {"message", e.message}, {"causes", causes}};
}

nlohmann::json to_json(const BatchReport& r) {
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(to_json(o));
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : r.errors) errors.push_back(to_json(e));
  return {{"summary",
           {{"n", r.summary.n},
            {"short_fraction", r.summary.short_fraction},
            {"calls", r.summary.calls},
            {"tokens", r.summary.tokens},
            {"wall_ms", r.summary.wall_ms}}},
          {"outcomes", outcomes},
          {"errors", errors}};
}

// ============================================================================
// SFT partition
// ============================================================================

SftPartition partition_sft(const std::vector<Prompt>& prompts, Backend& backend,
                           const consensus::RouterConfig& router, const DecodeSchedule& parallel,
                           Backend* teacher, const PartitionOptions& options) {
  auto cfg = router;
  cfg.mode = RouterMode::Consensus;
  check_router(cfg, parallel);
  const auto start = Clock::now();

  SftPartition out;
  for (const auto& prompt : prompts) {
    try {
      auto fo = options.fan_out;
      fo.slot_offset = 0;
      const auto probes = backends::fan_out(backend, prompt, parallel, out.metrics, fo);
      auto report = probe_consensus(probes, options.rules);
      report.route = consensus::route(report, cfg);

      if (*report.route == Route::Short) {
        out.short_set.push_back({prompt, report.majority});
      } else if (teacher != nullptr) {
        out.metrics.add_calls(1);
        const auto g = teacher->generate(prompt, options.teacher_params, 0);
        out.metrics.add_tokens(g.token_count());
        out.long_set.push_back({prompt, g.text(), answer_of(g.text(), options.rules)});
      } else {
        std::optional<std::size_t> best_cot, best_any;
        for (std::size_t i = 0; i < probes.size(); ++i) {
          if (!probes[i].ok()) continue;
          const auto& g = probes[i].result();
          const auto longer = [&](const std::optional<std::size_t>& cur) {
            return !cur || g.text().size() > probes[*cur].result().text().size();
          };
          if (longer(best_any)) best_any = i;
          if (consensus::contains_cot(g.text(), options.rules, g.token_count()) && longer(best_cot)) best_cot = i;
        }
        const auto& chain = probes[best_cot.value_or(*best_any)].result().text();
        out.long_set.push_back({prompt, chain, answer_of(chain, options.rules)});
      }
      out.reports.push_back({prompt.id(), std::move(report)});
    } catch (const std::exception& ex) {
      out.errors.push_back(prompt_error(prompt.id(), ex));
    }
  }
  out.metrics.add_wall_ms(elapsed_ms(start));
  return out;
}

ToyTokenizer::ToyTokenizer(std::size_t vocab, std::size_t prompts) : vocab_(vocab), prompts_(prompts) {
  if (vocab == 0 || prompts == 0) throw UsageError("toy tokenizer: vocab and prompts must be positive");
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::size_t ToyTokenizer::prompt_context(std::string_view prompt_id) const {
  return static_cast<std::size_t>(fnv1a(prompt_id) % prompts_);
}

rewards::Tokens ToyTokenizer::encode(std::string_view text, std::size_t max_len) const {
  rewards::Tokens out;
  std::size_t i = 0;
  while (i < text.size() && out.size() < max_len) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > begin)
      out.push_back(static_cast<std::size_t>(fnv1a(consensus::to_lower_ascii(text.substr(begin, i - begin))) % vocab_));
  }
  return out;
}

TokenizedSft tokenize(const SftPartition& partition, const ToyTokenizer& tokenizer,
                      std::size_t max_len) {
  TokenizedSft out;
  for (const auto& s : partition.short_set)
    out.short_set.push_back({tokenizer.prompt_context(s.prompt.id()), tokenizer.encode(s.answer, max_len)});
  for (const auto& l : partition.long_set)
    out.long_set.push_back({tokenizer.prompt_context(l.prompt.id()),
                            tokenizer.encode(l.chain + " " + l.answer, max_len)});
  return out;
}

SftLosses sft_losses(const rewards::ToyPolicy& policy, const TokenizedSft& data) {
  SftLosses out;
  for (const auto& s : data.short_set) out.short_loss -= rewards::sequence_log_prob(policy, s.prompt, s.tokens);
  for (const auto& l : data.long_set) out.long_loss -= rewards::sequence_log_prob(policy, l.prompt, l.tokens);
  out.total = out.short_loss + out.long_loss;
  return out;
}

// ============================================================================
// Judgment output
// ============================================================================

namespace {

std::optional<std::string_view> tag_span(std::string_view text, std::string_view lowered,
                                         std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto a = lowered.find(open);
  if (a == std::string_view::npos) return std::nullopt;
  const auto begin = a + open.size();
  const auto b = lowered.find(close, begin);
  if (b == std::string_view::npos) return std::nullopt;
  return text.substr(begin, b - begin);
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::size_t find_word(std::string_view s, std::string_view word) {
  for (auto pos = s.find(word); pos != std::string_view::npos; pos = s.find(word, pos + 1)) {
    const bool left = pos == 0 || !is_alpha(s[pos - 1]);
    const bool right = pos + word.size() == s.size() || !is_alpha(s[pos + word.size()]);
    if (left && right) return pos;
  }
  return std::string_view::npos;
}

}  // namespace

JudgmentParse parse_judgment(std::string_view text) noexcept {
  JudgmentParse out;
  try {
    const std::string lowered = consensus::to_lower_ascii(text);

    if (const auto span = tag_span(text, lowered, "predict")) {
      const auto s = *span;
      const auto d = std::find_if(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
      if (d != s.end()) {
        const auto e = std::find_if(d, s.end(), [](char c) { return c < '0' || c > '9'; });
        const bool negative = d != s.begin() && *(d - 1) == '-';
        if (!negative && e - d <= 3) {
          int v = 0;
          for (auto it = d; it != e; ++it) v = v * 10 + (*it - '0');
          if (v >= 1 && v <= 10) out.score = v;
        }
      }
    }

    if (const auto span = tag_span(text, lowered, "judgment")) {
      const std::string body = consensus::to_lower_ascii(*span);
      const auto yes = find_word(body, "yes");
      const auto no = find_word(body, "no");
      if (yes != std::string::npos || no != std::string::npos)
        out.verdict = yes < no ? Verdict::Yes : Verdict::No;
    }
  } catch (...) {
    return {};
  }
  return out;
}

std::string fill_judge_template(std::string_view tmpl, std::string_view question,
                                std::string_view response) {
  static constexpr std::string_view kQuestion = "{question}";
  static constexpr std::string_view kResponse = "{response}";
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.substr(i, kQuestion.size()) == kQuestion) {
      out += question;
      i += kQuestion.size();
    } else if (tmpl.substr(i, kResponse.size()) == kResponse) {
      out += response;
      i += kResponse.size();
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::string default_judge_template() {
  return
#include "judge_prompt.inc"
      ;
}

}  // namespace egrm::pipeline
