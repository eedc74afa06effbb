// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/cli/config.hpp"

#include <fstream>
#include <set>

namespace egrm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one object section; anything left unread is an error.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
    doc_ = &doc;
  }

  template <typename T>
  void read(const char* key, T& target) {
    if (doc_ == nullptr || !doc_->contains(key)) return;
    seen_.insert(key);
    try {
      target = doc_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const json& child(const char* key) {
    static const json null;
    if (doc_ == nullptr || !doc_->contains(key)) return null;
    seen_.insert(key);
    return doc_->at(key);
  }

  void finish() const {
    if (doc_ == nullptr) return;
    for (const auto& [key, value] : doc_->items())
      if (!seen_.count(key)) throw ConfigError("config: unknown key '" + name_ + "." + key + "'");
  }

 private:
  std::string name_;
  const json* doc_ = nullptr;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

BackendConfig backend_from_json(const json& doc, const std::string& name, const fs::path& base) {
  Section s(doc, name);
  BackendConfig out;
  std::string kind = "scripted";
  std::string endpoint, model, script;
  std::uint32_t timeout = out.descriptor.timeout_ms;
  s.read("kind", kind);
  s.read("endpoint", endpoint);
  s.read("model", model);
  s.read("timeout_ms", timeout);
  s.read("script", script);
  s.finish();

  if (kind == "scripted") {
    out.descriptor.kind = backends::BackendKind::Scripted;
  } else if (kind == "http") {
    out.descriptor.kind = backends::BackendKind::Http;
  } else {
    throw ConfigError("config: " + name + ".kind must be 'scripted' or 'http'");
  }
  if (!endpoint.empty()) out.descriptor.endpoint = endpoint;
  if (!model.empty()) out.descriptor.model_name = model;
  out.descriptor.timeout_ms = timeout;
  if (!script.empty()) out.script = resolve(base, script);
  return out;
}

void check_backend(const BackendConfig& b, const std::string& name) {
  b.descriptor.validate();
  if (b.descriptor.kind == backends::BackendKind::Scripted) {
    if (!b.script) throw ConfigError("config: " + name + " is scripted but has no 'script'");
    if (!fs::exists(*b.script)) throw ConfigError("config: script file not found: " + b.script->string());
  }
}

}  // namespace

EngineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  EngineConfig cfg;
  Section top(doc, "config");

  {
    Section d(top.child("defaults"), "defaults");
    std::uint64_t seed = 43;
    bool has_seed = false;
    d.read("m", cfg.router.m);
    d.read("tau", cfg.router.tau);
    d.read("k", cfg.k);
    d.read("delta", cfg.loss.delta);
    d.read("margin", cfg.loss.margin);
    d.read("alpha", cfg.loss.alpha);
    d.read("group_size", cfg.grpo.group_size);
    d.read("clip_eps", cfg.grpo.clip_eps);
    d.read("kl_coef", cfg.grpo.kl_coef);
    d.read("gamma", cfg.grpo.scorer_weight);
    d.read("lambda", cfg.grpo.kl_strength);
    d.read("beta", cfg.grpo.correctness_weight);
    d.read("w1", cfg.grpo.weights.w1);
    d.read("w2", cfg.grpo.weights.w2);
    d.read("w3", cfg.grpo.weights.w3);
    if (doc.contains("defaults") && doc.at("defaults").contains("seed")) has_seed = true;
    d.read("seed", seed);
    d.finish();
    if (has_seed) cfg.set_seed(seed);
  }
  {
    Section r(top.child("router"), "router");
    std::string mode = "consensus";
    r.read("mode", mode);
    r.read("answer_delimiter", cfg.rules.answer_delimiter);
    r.read("cot_markers", cfg.rules.cot_markers);
    r.read("cot_token_threshold", cfg.rules.cot_token_threshold);
    r.read("cot_char_threshold", cfg.rules.cot_char_threshold);
    r.finish();
    cfg.router.mode = consensus::mode_from_string(mode);
  }
  {
    Section s(top.child("schedules"), "schedules");
    s.read("parallel_temperature_min", cfg.ranges.parallel_temp_lo);
    s.read("parallel_temperature_max", cfg.ranges.parallel_temp_hi);
    s.read("parallel_top_p", cfg.ranges.parallel_top_p);
    s.read("parallel_max_tokens", cfg.ranges.parallel_max_tokens);
    s.read("candidate_temperature_min", cfg.ranges.candidate_temp_lo);
    s.read("candidate_temperature_max", cfg.ranges.candidate_temp_hi);
    s.read("candidate_top_p", cfg.ranges.candidate_top_p);
    s.read("candidate_max_tokens", cfg.ranges.candidate_max_tokens);
    s.finish();
  }
  cfg.backend = backend_from_json(top.child("backend"), "backend", base_dir);
  if (const auto& t = top.child("teacher"); !t.is_null()) cfg.teacher = backend_from_json(t, "teacher", base_dir);
  {
    Section s(top.child("scorer"), "scorer");
    std::string model;
    s.read("model", model);
    s.read("dim", cfg.feature_dim);
    s.read("hidden", cfg.train.hidden);
    s.read("learning_rate", cfg.train.learning_rate);
    s.read("steps", cfg.train.steps);
    s.read("batch_size", cfg.train.batch_size);
    s.read("grouped_mining", cfg.loss.grouped_mining);
    s.finish();
    if (!model.empty()) cfg.scorer_model = resolve(base_dir, model);
  }
  {
    Section g(top.child("grpo"), "grpo");
    std::string reward = "paired";
    g.read("learning_rate", cfg.grpo.learning_rate);
    g.read("steps", cfg.grpo.steps);
    g.read("pairs_per_step", cfg.grpo.pairs_per_step);
    g.read("inner_steps", cfg.grpo.inner_steps);
    g.read("token_budget", cfg.grpo.token_budget);
    g.read("reward", reward);
    g.read("vocab", cfg.toy_vocab);
    g.read("max_len", cfg.toy_max_len);
    g.read("prompts", cfg.toy_prompts);
    g.read("synthetic_pairs", cfg.toy_pairs);
    g.finish();
    if (reward == "paired") {
      cfg.grpo.reward = rewards::RewardKind::Paired;
    } else if (reward == "short_reasoning") {
      cfg.grpo.reward = rewards::RewardKind::ShortReasoning;
    } else {
      throw ConfigError("config: grpo.reward must be 'paired' or 'short_reasoning'");
    }
  }
  {
    Section c(top.child("concurrency"), "concurrency");
    c.read("max_in_flight", cfg.max_in_flight);
    c.read("retries", cfg.retries);
    c.read("parallel_prompts", cfg.parallel_prompts);
    c.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

EngineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& ex) {
    throw InputError("config file " + path.string() + ": " + ex.what());
  }
  return config_from_json(doc, fs::absolute(path).parent_path());
}

void EngineConfig::validate() const {
  router.validate();
  if (k < 1) throw ConfigError("config: k must be >= 1");
  loss.validate();
  train.validate();
  grpo.validate();
  if (feature_dim <= scorer::kFixedFeatures)
    throw ConfigError("config: scorer.dim must exceed " + std::to_string(scorer::kFixedFeatures));
  if (toy_vocab < 2 || toy_max_len < 1 || toy_prompts < 1 || toy_prompts > toy_vocab || toy_pairs < 1)
    throw ConfigError("config: grpo toy dimensions are out of range");
  if (max_in_flight < 1) throw ConfigError("config: max_in_flight must be >= 1");
  if (parallel_prompts < 1) throw ConfigError("config: parallel_prompts must be >= 1");
  check_backend(backend, "backend");
  if (teacher) check_backend(*teacher, "teacher");
  (void)schedules();
}

void EngineConfig::set_seed(std::uint64_t seed) {
  ranges.first_seed = seed;
  train.seed = seed;
  grpo.seed = seed;
}

backends::Schedules EngineConfig::schedules() const {
  return backends::default_schedules(router.m, k, ranges);
}

backends::FanOutOptions EngineConfig::fan_out() const {
  return {max_in_flight, retries, 0};
}

std::unique_ptr<backends::Backend> make_backend(const BackendConfig& config, std::size_t slot_limit) {
  if (config.descriptor.kind == backends::BackendKind::Http)
    return backends::HttpBackend::from_environment(config.descriptor);
  auto script = backends::Script::load(*config.script);
  script.check_slots(slot_limit);
  return std::make_unique<backends::ScriptedBackend>(std::move(script));
}

}  // namespace egrm::cli
