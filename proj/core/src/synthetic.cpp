// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "egrm/random.hpp"

namespace egrm::synthetic {

namespace {

constexpr std::array<const char*, 12> kNouns = {"apples", "trains", "coins",  "books",
                                                "marbles", "tickets", "boxes", "pencils",
                                                "cookies", "stamps",  "shells", "cards"};
constexpr std::array<const char*, 10> kFiller = {"well", "hmm",   "maybe", "overall", "indeed",
                                                 "also", "quite", "sort",  "anyway",  "okay"};

std::string pick(Rng& rng, const auto& words) { return words[rng.below(words.size())]; }

}  // namespace

double quality_logit(const scorer::FeatureVector& f) {
  // steps, prompt overlap, answer present, digit density.
  return 0.7 * (f[3] - 3.0) + 5.0 * (f[4] - 0.5) + 1.5 * (f[6] - 0.5) + 8.0 * (f[5] - 0.05);
}

std::vector<ScoredSample> scored_dataset(const ScoredRecipe& recipe) {
  Rng rng(recipe.seed);
  std::vector<ScoredSample> out;
  out.reserve(recipe.prompts * recipe.responses_per_prompt);

  for (std::size_t p = 0; p < recipe.prompts; ++p) {
    const std::string noun = pick(rng, kNouns);
    const int a = 2 + static_cast<int>(rng.below(40));
    const int b = 2 + static_cast<int>(rng.below(40));
    const std::string prompt_text = "Sam has " + std::to_string(a) + " " + noun + " and buys " +
                                    std::to_string(b) + " more " + noun +
                                    ". How many " + noun + " does Sam have now?";
    const std::vector<std::string> prompt_words = {"sam", "has", noun, "buys", "more",
                                                   "how", "many", "have", "now",
                                                   std::to_string(a), std::to_string(b)};
    const Prompt prompt("syn-" + std::to_string(p), prompt_text);

    for (std::size_t r = 0; r < recipe.responses_per_prompt; ++r) {
      const double relevance = rng.uniform01();
      const std::size_t steps = rng.below(7);
      const bool with_answer = rng.uniform01() < 0.7;
      std::string text;
      for (std::size_t s = 0; s < steps; ++s) {
        text += "Step " + std::to_string(s + 1) + ":";
        const std::size_t words = 3 + rng.below(4);
        for (std::size_t w = 0; w < words; ++w)
          text += " " + (rng.uniform01() < relevance ? prompt_words[rng.below(prompt_words.size())]
                                                      : pick(rng, kFiller));
        text += "\n";
      }
      const std::size_t tail = 1 + rng.below(5);
      for (std::size_t w = 0; w < tail; ++w) text += pick(rng, kFiller) + " ";
      if (with_answer) {
        const int guess = rng.uniform01() < relevance ? a + b : a + b + 1 + static_cast<int>(rng.below(9));
        text += "\nAnswer: " + std::to_string(guess);
      }

      const auto f = scorer::extract_features(prompt_text, text);
      const double clean = 1.0 / (1.0 + std::exp(-quality_logit(f)));
      const double q = std::clamp(clean + recipe.noise_sigma * rng.normal(), 0.0, 1.0);
      out.emplace_back(prompt, std::move(text), q);
    }
  }
  return out;
}

}  // namespace egrm::synthetic
