// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "egrm/backends.hpp"
#include "egrm/consensus.hpp"
#include "egrm/rewards.hpp"
#include "egrm/scorer.hpp"

namespace egrm::cli {

/// Unreadable or malformed input files (exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

struct BackendConfig {
  backends::BackendDescriptor descriptor;
  std::optional<std::filesystem::path> script;  // required for the scripted kind
};

struct EngineConfig {
  consensus::RouterConfig router;
  consensus::TextRules rules;
  std::size_t k = 8;
  backends::ScheduleRanges ranges;

  BackendConfig backend;
  std::optional<BackendConfig> teacher;

  scorer::HybridLossConfig loss;
  scorer::TrainConfig train;
  std::size_t feature_dim = scorer::kDefaultDim;
  std::optional<std::filesystem::path> scorer_model;  // written by train-scorer, read by infer

  rewards::GrpoConfig grpo;
  std::size_t toy_vocab = 8;
  std::size_t toy_max_len = 4;
  std::size_t toy_prompts = 8;
  std::size_t toy_pairs = 200;

  std::size_t max_in_flight = 8;
  std::size_t retries = 0;
  std::size_t parallel_prompts = 1;

  /// Throws ConfigError on out-of-range values or missing script files.
  void validate() const;

  /// Overrides every seeded component.
  void set_seed(std::uint64_t seed);

  backends::Schedules schedules() const;
  backends::FanOutOptions fan_out() const;
};

/// JSON document, comments allowed. Relative paths resolve against base_dir.
/// Unknown keys are rejected.
EngineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
EngineConfig load_config(const std::filesystem::path& path);

std::unique_ptr<backends::Backend> make_backend(const BackendConfig& config, std::size_t slot_limit);

}  // namespace egrm::cli
