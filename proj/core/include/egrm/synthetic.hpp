// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeded synthetic datasets for exercising the scorer without annotated data.

#include <cstdint>
#include <vector>

#include "egrm/scorer.hpp"
#include "egrm/types.hpp"

namespace egrm::synthetic {

/// Recipe: every prompt is an arithmetic-style question with
/// `responses_per_prompt` responses of varying step count, prompt relevance
/// and answer presence. The reference quality is
///   q = clamp(logistic(quality_logit(features)) + N(0, noise_sigma), 0, 1)
/// with features from scorer::extract_features at the default dimension.
struct ScoredRecipe {
  std::size_t prompts = 120;
  std::size_t responses_per_prompt = 10;
  double noise_sigma = 0.05;
  std::uint64_t seed = 43;
};

/// The fixed linear feature combination behind the synthetic q.
double quality_logit(const scorer::FeatureVector& f);

/// Samples ordered prompt by prompt; prompt ids are "syn-<index>".
std::vector<ScoredSample> scored_dataset(const ScoredRecipe& recipe);

}  // namespace egrm::synthetic
