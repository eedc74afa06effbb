// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "egrm/cli/config.hpp"
#include "egrm/rewards.hpp"

namespace egrm::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kInputError = 2,
  kBackendError = 3,
  kTrainingError = 4,
};

struct CommandOptions {
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
  bool forced_cot = false;
  rewards::Variant variant = rewards::Variant::Standard;
};

/// One JSON line per prompt: its consensus report and route, or an error.
int cmd_route(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Batch report JSON, written atomically to --output (stdout without it).
int cmd_infer(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// short.jsonl, long.jsonl and errors.jsonl in the --output directory.
int cmd_partition(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Scorer model at --output plus "<output>.loss.csv".
int cmd_train_scorer(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// curves.csv and policy.txt in the --output directory. Without --input the
/// synthetic toy task is used.
int cmd_grpo(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Human-readable summary of an infer report (.json) or a curves file (.csv).
int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Toy preference data from pair records, tokenized with the config's toy
/// vocabulary. Throws InputError for pairs that collapse after tokenization.
rewards::ToyPreferenceData tokenize_pairs(const std::vector<RawPairRecord>& records, const EngineConfig& cfg);

/// Parses argv-style arguments (without the program name) and runs a command.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace egrm::cli
