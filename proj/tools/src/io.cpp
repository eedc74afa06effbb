// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/cli/io.hpp"

#include <fstream>
#include <optional>

#include "egrm/cli/config.hpp"

namespace egrm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Line {
  std::size_t number;
  json value;
};

std::vector<Line> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<Line> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back({n, json::parse(line)});
    } catch (const json::parse_error& ex) {
      throw InputError(path.string() + ": line " + std::to_string(n) + ": malformed JSON (" + ex.what() + ")");
    }
  }
  return out;
}

template <typename T>
T field(const Line& line, const char* key) {
  if (!line.value.is_object()) throw InputError("line " + std::to_string(line.number) + ": record must be an object");
  if (!line.value.contains(key))
    throw InputError("line " + std::to_string(line.number) + ": missing field '" + key + "'");
  try {
    return line.value.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError("line " + std::to_string(line.number) + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const Line& line, const char* key) {
  if (!line.value.is_object() || !line.value.contains(key) || line.value.at(key).is_null()) return std::nullopt;
  return field<T>(line, key);
}

}  // namespace

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  for (auto& l : read_lines(path)) out.push_back(std::move(l.value));
  return out;
}

std::vector<Prompt> read_prompts(const fs::path& path) {
  std::vector<Prompt> out;
  for (const auto& l : read_lines(path)) {
    try {
      out.emplace_back(field<std::string>(l, "id"), field<std::string>(l, "text"),
                       optional_field<std::string>(l, "ground_truth"));
    } catch (const InvalidValue& ex) {
      throw InputError(path.string() + ": line " + std::to_string(l.number) + ": " + ex.what());
    } catch (const InputError& ex) {
      throw InputError(path.string() + ": " + ex.what());
    }
  }
  return out;
}

std::vector<RawScoredRecord> read_scored(const fs::path& path) {
  std::vector<RawScoredRecord> out;
  for (const auto& l : read_lines(path)) {
    try {
      out.push_back({field<std::string>(l, "id"), optional_field<std::string>(l, "prompt").value_or(""),
                     field<std::string>(l, "response"), field<double>(l, "q")});
    } catch (const InputError& ex) {
      throw InputError(path.string() + ": " + ex.what());
    }
  }
  return out;
}

std::vector<RawPairRecord> read_pairs(const fs::path& path) {
  std::vector<RawPairRecord> out;
  for (const auto& l : read_lines(path)) {
    try {
      out.push_back({field<std::string>(l, "id"), field<std::string>(l, "prompt"),
                     field<std::string>(l, "chosen"), field<std::string>(l, "rejected"),
                     optional_field<std::string>(l, "answer")});
    } catch (const InputError& ex) {
      throw InputError(path.string() + ": " + ex.what());
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace egrm::cli
