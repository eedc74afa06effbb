// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * Discriminative response scorer.
 *
 * A response is reduced to a fixed-length feature vector, passed through a
 * one-hidden-layer tanh network and squashed by a logistic, giving a quality
 * score in (0, 1). Training minimizes
 *
 *   alpha * mean_i Huber_delta(q_i - q̂_i) + (1 - alpha) * mean_(i,j) max(0, m - (q̂_i - q̂_j))
 *
 * where the hinge runs over mined pairs with q_i > q_j + m.
 *
 * Feature layout (dim = 16 by default, slots 8.. are trigram buckets):
 *   0  log(1 + response bytes)
 *   1  log(1 + prompt bytes)
 *   2  reasoning-marker occurrences in the response
 *   3  numbered-step lines ("1." / "2)" / "Step 3")
 *   4  share of distinct response words that also occur in the prompt
 *   5  digit bytes / response bytes
 *   6  1 if the answer delimiter is present, else 0
 *   7  log(1 + extracted final-answer bytes)
 *   8+ FNV-1a character-trigram histogram, dim - 8 buckets, sums to 1
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "egrm/consensus.hpp"
#include "egrm/types.hpp"

namespace egrm::scorer {

inline constexpr std::size_t kDefaultDim = 16;
inline constexpr std::size_t kDefaultHidden = 32;
inline constexpr std::size_t kFixedFeatures = 8;
inline constexpr int kModelFormatVersion = 1;

struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Deterministic features for (prompt, response). dim must be > kFixedFeatures.
FeatureVector extract_features(std::string_view prompt_text, std::string_view response,
                               std::size_t dim = kDefaultDim,
                               const consensus::TextRules& rules = {});

class ScorerModel {
 public:
  /// All-zero parameters.
  ScorerModel(std::size_t d, std::size_t hidden, std::uint64_t seed = 0);

  /// Parameters drawn uniformly from [-1/sqrt(d), 1/sqrt(d)] with `seed`.
  static ScorerModel initialized(std::size_t d, std::size_t hidden, std::uint64_t seed);

  std::size_t d() const noexcept { return d_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  /// Flat layout: W1 (hidden x d, row-major), b1 (hidden), w2 (hidden), b2.
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  /// logistic(w2 . tanh(W1 x + b1) + b2). Throws UsageError on a size mismatch.
  double score(std::span<const double> features) const;
  double score(const FeatureVector& f) const { return score(f.values); }

  /// Text format: "egrm-scorer <version>", "d <d>", "hidden <h>", "seed <s>",
  /// then one parameter per line at 17 significant digits.
  std::string to_text() const;
  static ScorerModel from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ScorerModel load(const std::filesystem::path& path);

 private:
  std::size_t d_;
  std::size_t hidden_;
  std::uint64_t seed_;
  std::vector<double> params_;
};

struct HybridLossConfig {
  double delta = 0.1;
  double margin = 0.2;
  double alpha = 0.7;
  bool grouped_mining = true;  // mine pairs within a prompt's responses only

  void validate() const;
};

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t steps = 3000;
  std::size_t batch_size = 1000;
  std::uint64_t seed = 43;
  std::size_t hidden = kDefaultHidden;

  void validate() const;
};

double huber(double q, double q_hat, double delta);
double hinge(double q_hat_i, double q_hat_j, double margin);

/// All (i, j) with q[i] > q[j] + margin, in lexicographic order. When `groups`
/// is nonempty only pairs with groups[i] == groups[j] qualify.
std::vector<std::pair<std::size_t, std::size_t>> mine_pairs(
    std::span<const double> q, double margin, std::span<const std::size_t> groups = {});

/// Features, reference qualities and prompt-group ids of a set of samples.
struct ScoredBatch {
  std::vector<FeatureVector> features;
  std::vector<double> q;
  std::vector<std::size_t> group;

  std::size_t size() const noexcept { return q.size(); }
};

/// Groups are numbered by first appearance of each prompt id.
ScoredBatch make_batch(const std::vector<ScoredSample>& samples, std::size_t dim = kDefaultDim,
                       const consensus::TextRules& rules = {});

/// Rows `indices` of `batch`, keeping their group ids.
ScoredBatch subset(const ScoredBatch& batch, std::span<const std::size_t> indices);

struct LossBreakdown {
  double loss = 0.0;
  double huber_mean = 0.0;
  double hinge_mean = 0.0;
  std::size_t pairs = 0;
  bool hinge_inactive = false;  // no pairs were mined, hinge term is 0
};

LossBreakdown hybrid_loss(const ScorerModel& model, const ScoredBatch& batch,
                          const HybridLossConfig& config);

/// Analytic gradient of hybrid_loss, same layout as ScorerModel::params().
/// The Huber kink |e| = delta takes the quadratic branch; the hinge kink
/// (gap exactly equal to the margin) takes the inactive branch.
std::vector<double> gradient(const ScorerModel& model, const ScoredBatch& batch,
                             const HybridLossConfig& config);

struct TrainResult {
  ScorerModel model;
  std::vector<double> loss_history;  // batch loss before each step
};

/// Plain gradient descent. Batches are whole prompt groups taken in a seeded
/// shuffled order until batch_size samples are collected. Throws
/// TrainingError if the loss turns non-finite.
TrainResult train(const ScoredBatch& dataset, const HybridLossConfig& loss_cfg,
                  const TrainConfig& train_cfg);
TrainResult train(const std::vector<ScoredSample>& dataset, const HybridLossConfig& loss_cfg,
                  const TrainConfig& train_cfg, std::size_t dim = kDefaultDim,
                  const consensus::TextRules& rules = {});

}  // namespace egrm::scorer
