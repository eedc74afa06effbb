// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/rewards.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace egrm::rewards {

// ============================================================================
// ToyPolicy
// ============================================================================

ToyPolicy::ToyPolicy(std::size_t vocab, std::size_t max_len, std::size_t prompts)
    : vocab_(vocab), max_len_(max_len), prompts_(prompts), logits_((prompts + vocab) * vocab, 0.0) {
  if (vocab < 2) throw UsageError("toy policy: vocab must be >= 2");
  if (max_len == 0) throw UsageError("toy policy: max_len must be positive");
  if (prompts == 0) throw UsageError("toy policy: need at least one prompt context");
}

ToyPolicy ToyPolicy::random(std::size_t vocab, std::size_t max_len, std::size_t prompts,
                            std::uint64_t seed, double scale) {
  ToyPolicy p(vocab, max_len, prompts);
  Rng rng(seed);
  for (auto& l : p.logits_) l = rng.uniform(-scale, scale);
  return p;
}

std::size_t ToyPolicy::context_at(std::size_t prompt, const Tokens& tokens, std::size_t t) const {
  return t == 0 ? prompt : prompts_ + tokens[t - 1];
}

std::span<const double> ToyPolicy::logits(std::size_t context) const {
  return std::span<const double>(logits_).subspan(context * vocab_, vocab_);
}

std::vector<double> ToyPolicy::log_probs(std::size_t context) const {
  const auto l = logits(context);
  const double mx = *std::max_element(l.begin(), l.end());
  double sum = 0.0;
  for (double v : l) sum += std::exp(v - mx);
  const double log_z = mx + std::log(sum);
  std::vector<double> out(vocab_);
  for (std::size_t k = 0; k < vocab_; ++k) out[k] = l[k] - log_z;
  return out;
}

std::vector<double> ToyPolicy::probs(std::size_t context) const {
  auto out = log_probs(context);
  for (auto& v : out) v = std::exp(v);
  return out;
}

Tokens ToyPolicy::sample(std::size_t prompt, Rng& rng) const {
  check(prompt, {});
  Tokens out;
  out.reserve(max_len_);
  for (std::size_t t = 0; t < max_len_; ++t) out.push_back(rng.categorical(probs(context_at(prompt, out, t))));
  return out;
}

void ToyPolicy::check(std::size_t prompt, const Tokens& tokens) const {
  if (prompt >= prompts_)
    throw UsageError("toy policy: prompt index " + std::to_string(prompt) + " out of range");
  if (tokens.size() > max_len_)
    throw UsageError("toy policy: sequence length " + std::to_string(tokens.size()) +
                     " exceeds max_len " + std::to_string(max_len_));
  for (auto t : tokens)
    if (t >= vocab_) throw UsageError("toy policy: token " + std::to_string(t) + " out of vocab");
}

std::string ToyPolicy::to_text() const {
  std::string out = "egrm-toy-policy 1\nvocab " + std::to_string(vocab_) + "\nmax_len " +
                    std::to_string(max_len_) + "\nprompts " + std::to_string(prompts_) + "\n";
  char buf[64];
  for (double v : logits_) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.append(buf, end);
    out += '\n';
  }
  return out;
}

ToyPolicy ToyPolicy::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag, kv, kl, kp;
  int version = 0;
  std::size_t vocab = 0, max_len = 0, prompts = 0;
  if (!(in >> tag >> version) || tag != "egrm-toy-policy" || version != 1)
    throw ConfigError("toy policy: bad header");
  if (!(in >> kv >> vocab >> kl >> max_len >> kp >> prompts) || kv != "vocab" || kl != "max_len" ||
      kp != "prompts")
    throw ConfigError("toy policy: malformed header");
  ToyPolicy p(vocab, max_len, prompts);
  for (auto& v : p.logits_) {
    std::string token;
    if (!(in >> token)) throw ConfigError("toy policy: truncated logits");
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw ConfigError("toy policy: bad logit '" + token + "'");
  }
  return p;
}

void ToyPolicy::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write toy policy to " + path.string());
  out << to_text();
}

// ============================================================================
// Configs
// ============================================================================

void ShortRewardWeights::validate() const {
  if (w1 < 0.0 || w2 < 0.0 || w3 < 0.0) throw ConfigError("short reward weights must be >= 0");
  if (std::abs(w1 + w2 + w3 - 1.0) > 1e-9) throw ConfigError("short reward weights must sum to 1");
}

std::string_view to_string(Variant v) noexcept {
  return v == Variant::Standard ? "standard" : "extended";
}

Variant variant_from_string(std::string_view s) {
  if (s == "standard") return Variant::Standard;
  if (s == "extended") return Variant::Extended;
  throw ConfigError("unknown grpo variant '" + std::string(s) + "'");
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("grpo: group_size must be >= 2");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("grpo: clip_eps must lie in (0, 1)");
  if (kl_coef < 0.0 || scorer_weight < 0.0 || kl_strength < 0.0 || correctness_weight < 0.0)
    throw ConfigError("grpo: coefficients must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("grpo: learning_rate must be > 0");
  if (steps == 0 || pairs_per_step == 0 || inner_steps == 0)
    throw ConfigError("grpo: steps, pairs_per_step and inner_steps must be positive");
  if (token_budget == 0) throw ConfigError("grpo: token_budget must be positive");
  weights.validate();
}

// ============================================================================
// Rewards
// ============================================================================

double paired_reward(double scorer_plus, double scorer_minus, bool plus_correct, double beta) {
  if (!(scorer_plus > 0.0 && scorer_plus < 1.0 && scorer_minus > 0.0 && scorer_minus < 1.0))
    throw UsageError("paired_reward: scorer values must lie in (0, 1)");
  return (scorer_plus - scorer_minus) + (plus_correct ? beta : 0.0);
}

double paired_reward(double scorer_plus, double scorer_minus, std::string_view answer_of_plus,
                     std::string_view ground_truth, double beta) {
  return paired_reward(scorer_plus, scorer_minus, answer_of_plus == ground_truth, beta);
}

double short_reasoning_reward(bool correct, std::uint64_t response_tokens,
                              std::uint64_t budget_tokens, double scorer_margin,
                              const ShortRewardWeights& w) {
  if (budget_tokens == 0) throw UsageError("short_reasoning_reward: budget must be positive");
  const double brevity =
      std::max(0.0, 1.0 - static_cast<double>(response_tokens) / static_cast<double>(budget_tokens));
  return w.w1 * (correct ? 1.0 : 0.0) + w.w2 * brevity + w.w3 * std::clamp(scorer_margin, -1.0, 1.0);
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw UsageError("group_advantages: need a group of at least 2");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / (sd + 1e-8));
  return out;
}

double pair_advantage(double paired_reward_value) {
  return std::clamp(std::abs(paired_reward_value), 0.0, 1.0);
}

// ============================================================================
// Policy quantities
// ============================================================================

double sequence_log_prob(const ToyPolicy& policy, std::size_t prompt, const Tokens& tokens) {
  policy.check(prompt, tokens);
  double total = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t)
    total += policy.log_probs(policy.context_at(prompt, tokens, t))[tokens[t]];
  return total;
}

std::vector<double> token_ratios(const ToyPolicy& new_policy, const ToyPolicy& old_policy,
                                 std::size_t prompt, const Tokens& tokens) {
  new_policy.check(prompt, tokens);
  old_policy.check(prompt, tokens);
  if (new_policy.contexts() != old_policy.contexts() || new_policy.vocab() != old_policy.vocab())
    throw UsageError("token_ratios: policies have different shapes");
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto c = new_policy.context_at(prompt, tokens, t);
    out.push_back(std::exp(new_policy.log_probs(c)[tokens[t]] - old_policy.log_probs(c)[tokens[t]]));
  }
  return out;
}

namespace {

// Whether min() picks the unclipped term r*A (ties included).
bool unclipped_selected(double r, double a, double eps) {
  const double clipped = std::clamp(r, 1.0 - eps, 1.0 + eps);
  return r * a <= clipped * a;
}

}  // namespace

double clipped_surrogate(std::span<const double> ratios, double advantage, double eps) {
  if (!(eps > 0.0)) throw UsageError("clipped_surrogate: eps must be > 0");
  if (ratios.empty()) return 0.0;
  double sum = 0.0;
  for (double r : ratios) {
    const double clipped = std::clamp(r, 1.0 - eps, 1.0 + eps);
    sum += std::min(r * advantage, clipped * advantage);
  }
  return sum / static_cast<double>(ratios.size());
}

double exact_kl(const ToyPolicy& a, const ToyPolicy& b) {
  if (a.contexts() != b.contexts() || a.vocab() != b.vocab())
    throw UsageError("exact_kl: policies have different shapes");
  double total = 0.0;
  for (std::size_t c = 0; c < a.contexts(); ++c) {
    const auto la = a.log_probs(c);
    const auto lb = b.log_probs(c);
    for (std::size_t k = 0; k < a.vocab(); ++k) total += std::exp(la[k]) * (la[k] - lb[k]);
  }
  return std::max(0.0, total / static_cast<double>(a.contexts()));
}

// ============================================================================
// Objectives
// ============================================================================

double surrogate_objective(const ToyPolicy& policy, const ToyPolicy& old_policy,
                           const ToyPolicy& ref_policy, std::span<const WeightedSequence> seqs,
                           double clip_eps, double kl_coef, double constant) {
  double total = constant;
  for (const auto& s : seqs)
    total += s.weight * clipped_surrogate(token_ratios(policy, old_policy, s.prompt, s.tokens),
                                          s.advantage, clip_eps);
  return total - kl_coef * exact_kl(policy, ref_policy);
}

std::vector<double> surrogate_gradient(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                       const ToyPolicy& ref_policy,
                                       std::span<const WeightedSequence> seqs, double clip_eps,
                                       double kl_coef) {
  const std::size_t v = policy.vocab();
  std::vector<double> grad(policy.params().size(), 0.0);

  for (const auto& s : seqs) {
    if (s.tokens.empty()) continue;
    const auto ratios = token_ratios(policy, old_policy, s.prompt, s.tokens);
    const double scale = s.weight / static_cast<double>(s.tokens.size());
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      if (!unclipped_selected(ratios[t], s.advantage, clip_eps)) continue;
      // d(r A)/d logit_j = A r (1[j = o_t] - p_j)
      const auto c = policy.context_at(s.prompt, s.tokens, t);
      const auto p = policy.probs(c);
      const double coeff = scale * s.advantage * ratios[t];
      for (std::size_t j = 0; j < v; ++j)
        grad[c * v + j] += coeff * ((j == s.tokens[t] ? 1.0 : 0.0) - p[j]);
    }
  }

  if (kl_coef != 0.0) {
    // d KL_c / d logit_j = p_j (log p_j - log q_j - KL_c)
    const double w = kl_coef / static_cast<double>(policy.contexts());
    for (std::size_t c = 0; c < policy.contexts(); ++c) {
      const auto lp = policy.log_probs(c);
      const auto lq = ref_policy.log_probs(c);
      double kl_c = 0.0;
      for (std::size_t k = 0; k < v; ++k) kl_c += std::exp(lp[k]) * (lp[k] - lq[k]);
      for (std::size_t j = 0; j < v; ++j)
        grad[c * v + j] -= w * std::exp(lp[j]) * (lp[j] - lq[j] - kl_c);
    }
  }
  return grad;
}

namespace {

std::vector<WeightedSequence> group_sequences(std::size_t prompt, const std::vector<Tokens>& outputs,
                                              std::span<const double> advantages) {
  if (outputs.size() != advantages.size())
    throw UsageError("grpo: outputs and advantages differ in length");
  std::vector<WeightedSequence> seqs;
  const double w = 1.0 / static_cast<double>(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) seqs.push_back({prompt, outputs[i], advantages[i], w});
  return seqs;
}

std::vector<WeightedSequence> pair_sequences(const TokenPair& pair, double advantage) {
  return {{pair.prompt, pair.preferred, advantage, 0.5}, {pair.prompt, pair.dispreferred, -advantage, 0.5}};
}

double ascend(ToyPolicy& policy, const std::vector<double>& grad, double lr) {
  auto params = policy.params();
  double norm2 = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double delta = lr * grad[k];
    params[k] += delta;
    norm2 += delta * delta;
  }
  return std::sqrt(norm2);
}

}  // namespace

double grpo_objective_standard(const ToyPolicy& policy, const ToyPolicy& old_policy,
                               const ToyPolicy& ref_policy, std::size_t prompt,
                               const std::vector<Tokens>& outputs,
                               std::span<const double> advantages, const GrpoConfig& config) {
  const auto seqs = group_sequences(prompt, outputs, advantages);
  return surrogate_objective(policy, old_policy, ref_policy, seqs, config.clip_eps, config.kl_coef);
}

double grpo_objective_extended(const ToyPolicy& policy, const ToyPolicy& old_policy,
                               const ToyPolicy& ref_policy, const TokenPair& pair,
                               double scorer_plus, double scorer_minus, double advantage,
                               const GrpoConfig& config) {
  const auto seqs = pair_sequences(pair, advantage);
  return surrogate_objective(policy, old_policy, ref_policy, seqs, config.clip_eps, config.kl_coef,
                             config.scorer_weight * (scorer_plus - scorer_minus));
}

StepDiagnostics grpo_step_standard(ToyPolicy& policy, const ToyPolicy& old_policy,
                                   const ToyPolicy& ref_policy, std::size_t prompt,
                                   const std::vector<Tokens>& outputs,
                                   std::span<const double> rewards, const GrpoConfig& config) {
  config.validate();
  if (outputs.size() != config.group_size)
    throw UsageError("grpo_step_standard: group has " + std::to_string(outputs.size()) +
                     " outputs, config expects " + std::to_string(config.group_size));
  StepDiagnostics diag;
  diag.advantages = group_advantages(rewards);
  const auto seqs = group_sequences(prompt, outputs, diag.advantages);
  diag.objective = surrogate_objective(policy, old_policy, ref_policy, seqs, config.clip_eps, config.kl_coef);
  diag.kl = exact_kl(policy, ref_policy);
  if (!std::isfinite(diag.objective)) throw TrainingError("grpo objective is not finite", 0);
  const auto grad = surrogate_gradient(policy, old_policy, ref_policy, seqs, config.clip_eps, config.kl_coef);
  diag.update_norm = ascend(policy, grad, config.learning_rate);
  return diag;
}

StepDiagnostics grpo_step_extended(ToyPolicy& policy, const ToyPolicy& old_policy,
                                   const ToyPolicy& ref_policy, const TokenPair& pair,
                                   double scorer_plus, double scorer_minus, bool plus_correct,
                                   const GrpoConfig& config) {
  config.validate();
  if (pair.preferred == pair.dispreferred)
    throw UsageError("grpo_step_extended: degenerate pair (preferred == dispreferred)");
  const double a = pair_advantage(
      paired_reward(scorer_plus, scorer_minus, plus_correct, config.correctness_weight));
  StepDiagnostics diag;
  diag.advantages = {a, -a};
  const auto seqs = pair_sequences(pair, a);
  diag.objective = surrogate_objective(policy, old_policy, ref_policy, seqs, config.clip_eps,
                                       config.kl_coef, config.scorer_weight * (scorer_plus - scorer_minus));
  diag.kl = exact_kl(policy, ref_policy);
  if (!std::isfinite(diag.objective)) throw TrainingError("grpo objective is not finite", 0);
  const auto grad = surrogate_gradient(policy, old_policy, ref_policy, seqs, config.clip_eps, config.kl_coef);
  diag.update_norm = ascend(policy, grad, config.learning_rate);
  return diag;
}

// ============================================================================
// Training
// ============================================================================

namespace {

bool answer_correct(const Tokens& seq, std::size_t answer) {
  return !seq.empty() && seq.back() == answer;
}

double reward_for(const ToyPreferenceData& data, const TokenPair& pair, const Tokens& output,
                  const GrpoConfig& config) {
  const double s_out = data.scorer(pair.prompt, output);
  const double s_minus = data.scorer(pair.prompt, pair.dispreferred);
  const bool correct = answer_correct(output, data.answers.at(pair.prompt));
  if (config.reward == RewardKind::ShortReasoning)
    return short_reasoning_reward(correct, output.size(), config.token_budget, s_out - s_minus,
                                  config.weights);
  return paired_reward(s_out, s_minus, correct, config.correctness_weight);
}

}  // namespace

double expected_pair_objective(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                               const ToyPreferenceData& data, const GrpoConfig& config) {
  if (data.pairs.empty()) throw UsageError("expected_pair_objective: no pairs");
  const std::size_t v = policy.vocab(), len = policy.max_len();
  std::size_t total = 1;
  for (std::size_t i = 0; i < len; ++i) total *= v;

  double sum = 0.0;
  Tokens seq(len);
  for (const auto& pair : data.pairs) {
    double expected = 0.0;
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t rest = code;
      for (std::size_t t = 0; t < len; ++t) {
        seq[t] = rest % v;
        rest /= v;
      }
      expected += std::exp(sequence_log_prob(policy, pair.prompt, seq)) *
                  paired_reward(data.scorer(pair.prompt, seq), data.scorer(pair.prompt, pair.dispreferred),
                                answer_correct(seq, data.answers.at(pair.prompt)),
                                config.correctness_weight);
    }
    sum += expected;
  }
  return sum / static_cast<double>(data.pairs.size()) - config.kl_strength * exact_kl(policy, ref_policy);
}

std::size_t GrpoResult::steps_to_reach(double threshold) const {
  for (const auto& p : curve)
    if (p.mean_preferred_prob > threshold) return p.step;
  return curve.size() + 1;
}

double mean_preferred_prob(const ToyPolicy& policy, const std::vector<TokenPair>& pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs) sum += std::exp(sequence_log_prob(policy, p.prompt, p.preferred));
  return sum / static_cast<double>(pairs.size());
}

GrpoResult train_grpo(const ToyPreferenceData& data, const ToyPolicy& initial, Variant variant,
                      const GrpoConfig& config) {
  config.validate();
  if (data.pairs.empty()) throw UsageError("train_grpo: dataset must be nonempty");
  if (!data.scorer) throw UsageError("train_grpo: scorer is required");
  if (data.answers.size() != initial.prompts())
    throw UsageError("train_grpo: need one answer per prompt context");
  for (const auto& p : data.pairs) {
    initial.check(p.prompt, p.preferred);
    initial.check(p.prompt, p.dispreferred);
    if (p.preferred == p.dispreferred) throw UsageError("train_grpo: degenerate pair");
  }

  GrpoResult result{initial, variant, {}};
  const ToyPolicy ref = initial;
  Rng rng(config.seed);
  std::vector<std::size_t> order(data.pairs.size());
  std::size_t cursor = order.size();
  const double batch_w = 1.0 / static_cast<double>(config.pairs_per_step);

  for (std::size_t step = 1; step <= config.steps; ++step) {
    const ToyPolicy old = result.policy;
    std::vector<WeightedSequence> seqs;
    double constant = 0.0;

    for (std::size_t b = 0; b < config.pairs_per_step; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        cursor = 0;
      }
      const auto& pair = data.pairs[order[cursor++]];

      if (variant == Variant::Standard) {
        std::vector<Tokens> outputs;
        std::vector<double> rewards;
        for (std::size_t g = 0; g < config.group_size; ++g) {
          outputs.push_back(old.sample(pair.prompt, rng));
          rewards.push_back(reward_for(data, pair, outputs.back(), config));
        }
        const auto adv = group_advantages(rewards);
        const double w = batch_w / static_cast<double>(config.group_size);
        for (std::size_t g = 0; g < outputs.size(); ++g)
          seqs.push_back({pair.prompt, std::move(outputs[g]), adv[g], w});
      } else {
        const double s_plus = data.scorer(pair.prompt, pair.preferred);
        const double s_minus = data.scorer(pair.prompt, pair.dispreferred);
        const bool correct = answer_correct(pair.preferred, data.answers.at(pair.prompt));
        const double a = pair_advantage(paired_reward(s_plus, s_minus, correct, config.correctness_weight));
        seqs.push_back({pair.prompt, pair.preferred, a, 0.5 * batch_w});
        seqs.push_back({pair.prompt, pair.dispreferred, -a, 0.5 * batch_w});
        constant += batch_w * config.scorer_weight * (s_plus - s_minus);
      }
    }

    double objective = 0.0;
    for (std::size_t inner = 0; inner < config.inner_steps; ++inner) {
      objective = surrogate_objective(result.policy, old, ref, seqs, config.clip_eps, config.kl_coef, constant);
      if (!std::isfinite(objective)) throw TrainingError("grpo objective is not finite", step);
      const auto grad = surrogate_gradient(result.policy, old, ref, seqs, config.clip_eps, config.kl_coef);
      ascend(result.policy, grad, config.learning_rate);
    }
    for (double p : result.policy.params())
      if (!std::isfinite(p)) throw TrainingError("grpo parameters became non-finite", step);

    result.curve.push_back({step, objective, mean_preferred_prob(result.policy, data.pairs),
                            exact_kl(result.policy, ref)});
  }
  return result;
}

std::string curves_csv(const GrpoResult& result) {
  std::string out = "step,variant,objective,mean_preferred_prob,kl\n";
  char buf[64];
  auto fmt = [&](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, end);
  };
  for (const auto& p : result.curve) {
    out += std::to_string(p.step) + "," + std::string(to_string(result.variant)) + "," +
           fmt(p.objective) + "," + fmt(p.mean_preferred_prob) + "," + fmt(p.kl) + "\n";
  }
  return out;
}

SequenceScorer reference_match_scorer(std::vector<Tokens> targets, std::size_t max_len) {
  return [targets = std::move(targets), max_len](std::size_t prompt, const Tokens& tokens) {
    const auto& target = targets.at(prompt);
    std::size_t prefix = 0;
    while (prefix < std::min(tokens.size(), target.size()) && tokens[prefix] == target[prefix]) ++prefix;
    return 0.05 + 0.9 * static_cast<double>(prefix) / static_cast<double>(max_len);
  };
}

ToyTask make_toy_task(std::size_t pairs, std::size_t vocab, std::size_t max_len,
                      std::size_t prompts, std::uint64_t seed) {
  if (pairs == 0 || prompts == 0) throw UsageError("make_toy_task: need pairs and prompts");
  if (prompts > vocab) throw UsageError("make_toy_task: at most vocab prompts");
  Rng rng(seed);

  // Preferred successor map: a random permutation. Dispreferred map: a random
  // permutation shifted so it never agrees with the preferred one.
  std::vector<std::size_t> good(vocab), order(vocab);
  std::iota(good.begin(), good.end(), std::size_t{0});
  rng.shuffle(good);
  std::vector<std::size_t> bad(vocab);
  const std::size_t shift = 1 + rng.below(vocab - 1);
  for (std::size_t t = 0; t < vocab; ++t) bad[t] = good[(t + shift) % vocab];
  // Distinct preferred/dispreferred start tokens per prompt.
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  auto follow = [&](std::size_t first, const std::vector<std::size_t>& succ) {
    Tokens seq{first};
    while (seq.size() < max_len) seq.push_back(succ[seq.back()]);
    return seq;
  };

  ToyTask task{{}, ToyPolicy::random(vocab, max_len, prompts, seed ^ 0x5bd1e995ULL)};
  std::vector<Tokens> targets;
  std::vector<TokenPair> prompt_pairs;
  for (std::size_t p = 0; p < prompts; ++p) {
    const std::size_t first_good = order[p];
    const std::size_t first_bad = order[(p + 1) % vocab];
    TokenPair tp{p, follow(first_good, good), follow(first_bad, bad)};
    targets.push_back(tp.preferred);
    task.data.answers.push_back(tp.preferred.back());
    prompt_pairs.push_back(std::move(tp));
  }
  for (std::size_t i = 0; i < pairs; ++i) task.data.pairs.push_back(prompt_pairs[rng.below(prompts)]);
  task.data.scorer = reference_match_scorer(std::move(targets), max_len);
  return task;
}

}  // namespace egrm::rewards
