// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/consensus.hpp"

#include <algorithm>
#include <cctype>

#include "egrm/types.hpp"

namespace egrm::consensus {

std::string_view to_string(Route r) noexcept { return r == Route::Short ? "short" : "long"; }

std::string_view to_string(RouterMode m) noexcept {
  return m == RouterMode::Consensus ? "consensus" : "contains_cot";
}

Route route_from_string(std::string_view s) {
  if (s == "short") return Route::Short;
  if (s == "long") return Route::Long;
  throw ConfigError("unknown route '" + std::string(s) + "'");
}

RouterMode mode_from_string(std::string_view s) {
  if (s == "consensus") return RouterMode::Consensus;
  if (s == "contains_cot") return RouterMode::ContainsCoT;
  throw ConfigError("unknown router mode '" + std::string(s) + "'");
}

void RouterConfig::validate() const {
  if (m < 2) throw ConfigError("router: m must be >= 2 (consensus needs at least two samples)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("router: tau must lie in (0, 1]");
}

std::size_t ConsensusReport::max_count() const noexcept {
  auto it = counts.find(majority);
  return it == counts.end() ? 0 : it->second;
}

namespace {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

// [+-]? digits [. digits?] | [+-]? . digits
bool is_decimal(std::string_view s) noexcept {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < s.size() && is_digit(s[i])) ++i, ++int_digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i, ++frac_digits;
  }
  return i == s.size() && (int_digits + frac_digits) > 0;
}

std::string normalize_decimal(std::string_view s) {
  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  const auto dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);

  while (!int_part.empty() && int_part.front() == '0') int_part.remove_prefix(1);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);

  std::string out;
  if (int_part.empty() && frac_part.empty()) return "0";  // also maps -0, -0.00
  if (negative) out += '-';
  out += int_part.empty() ? std::string_view("0") : int_part;
  if (!frac_part.empty()) {
    out += '.';
    out += frac_part;
  }
  return out;
}

}  // namespace

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t count_occurrences_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  const std::string h = to_lower_ascii(haystack);
  const std::string n = to_lower_ascii(needle);
  std::size_t count = 0;
  for (auto pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + n.size())) ++count;
  return count;
}

std::string extract_final_answer(std::string_view text, const TextRules& rules) {
  if (!rules.answer_delimiter.empty()) {
    const std::string lowered = to_lower_ascii(text);
    const std::string delim = to_lower_ascii(rules.answer_delimiter);
    if (const auto pos = lowered.rfind(delim); pos != std::string::npos)
      return std::string(trim(text.substr(pos + delim.size())));
  }
  // Last nonempty line.
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto nl = rest.rfind('\n');
    std::string_view line = nl == std::string_view::npos ? rest : rest.substr(nl + 1);
    if (const auto t = trim(line); !t.empty()) return std::string(t);
    if (nl == std::string_view::npos) break;
    rest = rest.substr(0, nl);
  }
  return {};
}

CanonicalAnswer canonicalize(std::string_view raw) {
  std::string collapsed;
  collapsed.reserve(raw.size());
  bool pending_space = false;
  for (char c : trim(raw)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) collapsed += ' ';
    pending_space = false;
    collapsed += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  // Strip trailing periods; "a ." leaves a space behind, so trim again.
  std::string_view key = collapsed;
  while (!key.empty() && (key.back() == '.' || is_space(key.back()))) key.remove_suffix(1);

  std::string canonical = is_decimal(key) ? normalize_decimal(key) : std::string(key);
  return {std::string(raw), std::move(canonical)};
}

ConsensusReport compute_consensus(const std::vector<CanonicalAnswer>& answers) {
  if (answers.empty()) throw UsageError("compute_consensus: need at least one answer (M >= 1)");
  ConsensusReport report;
  report.m = answers.size();
  for (const auto& a : answers) ++report.counts[a.canonical];

  std::size_t best = 0;
  for (const auto& [key, count] : report.counts) {
    // std::map iterates keys in ascending order, so strict > keeps the
    // lexicographically smallest key among ties.
    if (count > best) {
      best = count;
      report.majority = key;
    }
  }
  report.consensus = static_cast<double>(best) / static_cast<double>(report.m);
  return report;
}

Route route(const ConsensusReport& report, const RouterConfig& config) {
  config.validate();
  if (report.m != config.m)
    throw ConfigError("route: report has m=" + std::to_string(report.m) +
                      " but router expects m=" + std::to_string(config.m));
  // 1e-12 absorbs rounding in count/m so the inclusive boundary holds.
  return report.consensus + 1e-12 >= config.tau ? Route::Short : Route::Long;
}

bool contains_cot(std::string_view text, const TextRules& rules,
                  std::optional<std::uint64_t> token_count) {
  const std::string lowered = to_lower_ascii(text);
  for (const auto& marker : rules.cot_markers) {
    if (!marker.empty() && lowered.find(to_lower_ascii(marker)) != std::string::npos) return true;
  }
  if (rules.numbered_line_marker) {
    std::size_t start = 0;
    while (start <= lowered.size()) {
      const auto nl = lowered.find('\n', start);
      std::string_view line = std::string_view(lowered).substr(
          start, nl == std::string::npos ? std::string::npos : nl - start);
      while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
      if (line.starts_with("1.")) return true;
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  }
  if (token_count) return *token_count > rules.cot_token_threshold;
  return text.size() > rules.cot_char_threshold;
}

}  // namespace egrm::consensus
