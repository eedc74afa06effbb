// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// JSON Lines datasets and atomic file output.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "egrm/types.hpp"

namespace egrm::cli {

/// One JSON value per nonblank line. Throws InputError naming the 1-based
/// line of the first malformed record.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// {"id", "text", "ground_truth"?}
std::vector<Prompt> read_prompts(const std::filesystem::path& path);

/// {"id", "prompt"?, "response", "q"}
std::vector<RawScoredRecord> read_scored(const std::filesystem::path& path);

/// {"id", "prompt", "chosen", "rejected", "answer"?}
std::vector<RawPairRecord> read_pairs(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<nlohmann::json>& records);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace egrm::cli
