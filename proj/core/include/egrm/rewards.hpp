// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * Preference rewards and group-relative policy optimization on a toy policy.
 *
 * ToyPolicy is a first-order autoregressive categorical model: the first token
 * is drawn from a per-prompt start context, every later token from a context
 * keyed by the previous token. Per-token ratios, clipping and the KL to a
 * reference policy are all exact, so every objective here has a closed-form
 * gradient that tests check against finite differences.
 *
 * Two objectives share one implementation (weighted clipped surrogate minus a
 * KL penalty):
 *   - standard: G sampled outputs per prompt, weight 1/G each, advantages are
 *     the group z-score of their rewards;
 *   - extended: the preferred and dispreferred sequence of a pair, weight 1/2
 *     each, advantages +a / -a with a = clamp(|R_pair|, 0, 1), plus the
 *     constant scorer_weight * (S+ - S-).
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "egrm/random.hpp"
#include "egrm/types.hpp"

namespace egrm::rewards {

using Tokens = std::vector<std::size_t>;

class ToyPolicy {
 public:
  /// Uniform policy (all logits zero).
  explicit ToyPolicy(std::size_t vocab = 8, std::size_t max_len = 4, std::size_t prompts = 1);

  /// Logits drawn uniformly from [-scale, scale].
  static ToyPolicy random(std::size_t vocab, std::size_t max_len, std::size_t prompts,
                          std::uint64_t seed, double scale = 0.1);

  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t max_len() const noexcept { return max_len_; }
  std::size_t prompts() const noexcept { return prompts_; }
  std::size_t contexts() const noexcept { return prompts_ + vocab_; }

  /// Context of position t: the prompt's start context at t = 0, otherwise
  /// the context keyed by the previous token.
  std::size_t context_at(std::size_t prompt, const Tokens& tokens, std::size_t t) const;

  /// Row-major contexts x vocab logits.
  std::span<const double> params() const noexcept { return logits_; }
  std::span<double> params() noexcept { return logits_; }
  std::span<const double> logits(std::size_t context) const;

  std::vector<double> probs(std::size_t context) const;
  std::vector<double> log_probs(std::size_t context) const;

  /// Draws max_len tokens.
  Tokens sample(std::size_t prompt, Rng& rng) const;

  /// Throws UsageError for a bad prompt index, an out-of-vocab token or a
  /// sequence longer than max_len.
  void check(std::size_t prompt, const Tokens& tokens) const;

  std::string to_text() const;
  static ToyPolicy from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t vocab_;
  std::size_t max_len_;
  std::size_t prompts_;
  std::vector<double> logits_;
};

struct ShortRewardWeights {
  double w1 = 0.7;  // correctness
  double w2 = 0.2;  // brevity headroom
  double w3 = 0.1;  // scorer margin

  void validate() const;
};

enum class Variant { Standard, Extended };
enum class RewardKind { Paired, ShortReasoning };

std::string_view to_string(Variant v) noexcept;
Variant variant_from_string(std::string_view s);

struct GrpoConfig {
  std::size_t group_size = 8;
  double clip_eps = 0.2;
  double kl_coef = 0.02;             // KL weight inside both GRPO objectives
  double scorer_weight = 1.0;        // gamma, extended objective only
  double kl_strength = 0.02;         // lambda of the expected-pair-reward objective
  double correctness_weight = 1.0;   // beta of the paired reward
  double learning_rate = 2.0;
  std::size_t steps = 500;
  std::size_t pairs_per_step = 8;
  std::size_t inner_steps = 2;       // updates per old-policy snapshot
  std::uint64_t seed = 43;
  RewardKind reward = RewardKind::Paired;
  std::size_t token_budget = 4;      // short-reasoning reward budget
  ShortRewardWeights weights{};

  void validate() const;
};

// ----------------------------------------------------------------------------
// Rewards
// ----------------------------------------------------------------------------

/// (S+ - S-) + beta * [answer_of_plus == ground_truth]. Scorer values must lie
/// in (0, 1).
double paired_reward(double scorer_plus, double scorer_minus, std::string_view answer_of_plus,
                     std::string_view ground_truth, double beta);
double paired_reward(double scorer_plus, double scorer_minus, bool plus_correct, double beta);

/// w1 [correct] + w2 max(0, 1 - tokens / budget) + w3 clamp(margin, -1, 1).
double short_reasoning_reward(bool correct, std::uint64_t response_tokens,
                              std::uint64_t budget_tokens, double scorer_margin,
                              const ShortRewardWeights& w = {});

/// (R_i - mean) / (std + 1e-8), population std. Throws UsageError for G < 2.
std::vector<double> group_advantages(std::span<const double> rewards);

/// clamp(|R_pair|, 0, 1): magnitude of the extended variant's +/- advantages.
double pair_advantage(double paired_reward_value);

// ----------------------------------------------------------------------------
// Policy quantities
// ----------------------------------------------------------------------------

double sequence_log_prob(const ToyPolicy& policy, std::size_t prompt, const Tokens& tokens);

std::vector<double> token_ratios(const ToyPolicy& new_policy, const ToyPolicy& old_policy,
                                 std::size_t prompt, const Tokens& tokens);

/// Token mean of min(r_t A, clip(r_t, 1 - eps, 1 + eps) A); 0 for no tokens.
double clipped_surrogate(std::span<const double> ratios, double advantage, double eps);

/// Mean over contexts of KL(a(.|c) || b(.|c)).
double exact_kl(const ToyPolicy& a, const ToyPolicy& b);

// ----------------------------------------------------------------------------
// Objectives
// ----------------------------------------------------------------------------

struct WeightedSequence {
  std::size_t prompt = 0;
  Tokens tokens;
  double advantage = 0.0;
  double weight = 1.0;
};

/// sum_s weight_s * clipped_surrogate(ratios_s, A_s) - kl_coef * KL(policy || ref) + constant
double surrogate_objective(const ToyPolicy& policy, const ToyPolicy& old_policy,
                           const ToyPolicy& ref_policy, std::span<const WeightedSequence> seqs,
                           double clip_eps, double kl_coef, double constant = 0.0);

/// Gradient of surrogate_objective with respect to policy logits. Where the
/// clipped branch is selected outside [1 - eps, 1 + eps] the token contributes 0.
std::vector<double> surrogate_gradient(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                       const ToyPolicy& ref_policy,
                                       std::span<const WeightedSequence> seqs, double clip_eps,
                                       double kl_coef);

/// Standard objective for one group with explicit advantages.
double grpo_objective_standard(const ToyPolicy& policy, const ToyPolicy& old_policy,
                               const ToyPolicy& ref_policy, std::size_t prompt,
                               const std::vector<Tokens>& outputs,
                               std::span<const double> advantages, const GrpoConfig& config);

struct TokenPair {
  std::size_t prompt = 0;
  Tokens preferred;
  Tokens dispreferred;
};

/// Extended objective for one pair with advantages (+a, -a).
double grpo_objective_extended(const ToyPolicy& policy, const ToyPolicy& old_policy,
                               const ToyPolicy& ref_policy, const TokenPair& pair,
                               double scorer_plus, double scorer_minus, double advantage,
                               const GrpoConfig& config);

struct StepDiagnostics {
  double objective = 0.0;  // before the update
  double kl = 0.0;         // KL(policy || ref) before the update
  double update_norm = 0.0;
  std::vector<double> advantages;
};

/// One ascent step on a group of G outputs scored by `rewards`.
StepDiagnostics grpo_step_standard(ToyPolicy& policy, const ToyPolicy& old_policy,
                                   const ToyPolicy& ref_policy, std::size_t prompt,
                                   const std::vector<Tokens>& outputs,
                                   std::span<const double> rewards, const GrpoConfig& config);

/// One ascent step on a preference pair. `plus_correct` feeds the paired
/// reward's correctness term. Throws UsageError when preferred == dispreferred.
StepDiagnostics grpo_step_extended(ToyPolicy& policy, const ToyPolicy& old_policy,
                                   const ToyPolicy& ref_policy, const TokenPair& pair,
                                   double scorer_plus, double scorer_minus, bool plus_correct,
                                   const GrpoConfig& config);

// ----------------------------------------------------------------------------
// Training
// ----------------------------------------------------------------------------

/// Scores a token sequence for a prompt; values must lie in (0, 1).
using SequenceScorer = std::function<double(std::size_t prompt, const Tokens& tokens)>;

/// A preference dataset over the toy vocabulary. The answer of a sequence is
/// its last token; `answers[p]` is the ground truth of prompt p.
struct ToyPreferenceData {
  std::vector<TokenPair> pairs;
  std::vector<std::size_t> answers;
  SequenceScorer scorer;
};

/// Expected paired reward of the policy's own samples against each pair's
/// dispreferred response, minus kl_strength * KL(policy || ref). Enumerates
/// every sequence of length max_len, so keep vocab^max_len small.
double expected_pair_objective(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                               const ToyPreferenceData& data, const GrpoConfig& config);

struct CurvePoint {
  std::size_t step = 0;
  double objective = 0.0;
  double mean_preferred_prob = 0.0;
  double kl = 0.0;
};

struct GrpoResult {
  ToyPolicy policy;
  Variant variant = Variant::Standard;
  std::vector<CurvePoint> curve;  // one point per step, after its update

  /// First step whose mean preferred probability exceeds threshold, or
  /// curve.size() + 1 when never reached.
  std::size_t steps_to_reach(double threshold) const;
};

double mean_preferred_prob(const ToyPolicy& policy, const std::vector<TokenPair>& pairs);

/// Deterministic given (data, initial, config). Standard samples G outputs per
/// pair from the old policy and rewards each against the pair's dispreferred
/// response; Extended uses the pair itself.
GrpoResult train_grpo(const ToyPreferenceData& data, const ToyPolicy& initial, Variant variant,
                      const GrpoConfig& config);

/// CSV with header "step,variant,objective,mean_preferred_prob,kl".
std::string curves_csv(const GrpoResult& result);

/// Synthetic two-response task: `prompts` start contexts, each with one fixed
/// preferred sequence (following a successor permutation of the vocabulary)
/// and one dispreferred sequence (a different start token and a successor map
/// that never agrees with the preferred one). `pairs` records are drawn over
/// the prompts. The scorer rewards the length of the common prefix with the
/// prompt's preferred sequence: 0.05 + 0.9 * prefix / max_len.
struct ToyTask {
  ToyPreferenceData data;
  ToyPolicy initial;
};

ToyTask make_toy_task(std::size_t pairs = 200, std::size_t vocab = 8, std::size_t max_len = 4,
                      std::size_t prompts = 8, std::uint64_t seed = 43);

/// Agreement scorer used by make_toy_task and the grpo command.
SequenceScorer reference_match_scorer(std::vector<Tokens> targets, std::size_t max_len);

}  // namespace egrm::rewards
