// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/scorer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "egrm/random.hpp"

namespace egrm::scorer {

// ============================================================================
// Features
// ============================================================================

namespace {

bool is_word_byte(unsigned char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::set<std::string> word_set(std::string_view text) {
  std::set<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current += static_cast<char>((c >= 'A' && c <= 'Z') ? c + 32 : c);
    } else if (!current.empty()) {
      words.insert(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.insert(std::move(current));
  return words;
}

// "1." / "12)" / "step 3" at the start of a (left-trimmed) line.
bool is_numbered_step(std::string_view line) {
  line = consensus::trim(line);
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return true;
  if (line.size() >= 6) {
    const std::string head = consensus::to_lower_ascii(line.substr(0, 5));
    if (head == "step " && line[5] >= '0' && line[5] <= '9') return true;
  }
  return false;
}

std::uint32_t fnv1a(std::string_view bytes) noexcept {
  std::uint32_t h = 2166136261u;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 16777619u;
  }
  return h;
}

}  // namespace

FeatureVector extract_features(std::string_view prompt_text, std::string_view response,
                               std::size_t dim, const consensus::TextRules& rules) {
  if (dim <= kFixedFeatures)
    throw UsageError("extract_features: dim must exceed " + std::to_string(kFixedFeatures));
  FeatureVector f{std::vector<double>(dim, 0.0)};
  auto& v = f.values;

  v[0] = std::log1p(static_cast<double>(response.size()));
  v[1] = std::log1p(static_cast<double>(prompt_text.size()));

  std::size_t markers = 0;
  for (const auto& m : rules.cot_markers) markers += consensus::count_occurrences_ci(response, m);
  v[2] = static_cast<double>(markers);

  std::size_t steps = 0;
  for (std::size_t start = 0; start < response.size();) {
    const auto nl = response.find('\n', start);
    const auto end = nl == std::string_view::npos ? response.size() : nl;
    if (is_numbered_step(response.substr(start, end - start))) ++steps;
    start = end + 1;
  }
  v[3] = static_cast<double>(steps);

  const auto response_words = word_set(response);
  if (!response_words.empty()) {
    const auto prompt_words = word_set(prompt_text);
    std::size_t shared = 0;
    for (const auto& w : response_words) shared += prompt_words.count(w);
    v[4] = static_cast<double>(shared) / static_cast<double>(response_words.size());
  }

  if (!response.empty()) {
    const auto digits = std::count_if(response.begin(), response.end(),
                                      [](char c) { return c >= '0' && c <= '9'; });
    v[5] = static_cast<double>(digits) / static_cast<double>(response.size());
  }

  v[6] = (!rules.answer_delimiter.empty() &&
          consensus::count_occurrences_ci(response, rules.answer_delimiter) > 0)
             ? 1.0
             : 0.0;
  v[7] = std::log1p(static_cast<double>(consensus::extract_final_answer(response, rules).size()));

  const std::size_t buckets = dim - kFixedFeatures;
  if (response.size() >= 3) {
    const std::string lowered = consensus::to_lower_ascii(response);
    const std::size_t trigrams = lowered.size() - 2;
    for (std::size_t i = 0; i < trigrams; ++i)
      v[kFixedFeatures + fnv1a(std::string_view(lowered).substr(i, 3)) % buckets] += 1.0;
    for (std::size_t b = 0; b < buckets; ++b) v[kFixedFeatures + b] /= static_cast<double>(trigrams);
  }
  return f;
}

// ============================================================================
// Model
// ============================================================================

namespace {

double logistic(double z) noexcept {
  // Split on sign so exp never overflows.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

ScorerModel::ScorerModel(std::size_t d, std::size_t hidden, std::uint64_t seed)
    : d_(d), hidden_(hidden), seed_(seed), params_(d * hidden + hidden + hidden + 1, 0.0) {
  if (d == 0 || hidden == 0) throw UsageError("scorer model: d and hidden must be positive");
}

ScorerModel ScorerModel::initialized(std::size_t d, std::size_t hidden, std::uint64_t seed) {
  ScorerModel model(d, hidden, seed);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& p : model.params_) p = rng.uniform(-bound, bound);
  return model;
}

double ScorerModel::score(std::span<const double> x) const {
  if (x.size() != d_)
    throw UsageError("scorer: feature length " + std::to_string(x.size()) + " != model d " +
                     std::to_string(d_));
  const double* w1 = params_.data();
  const double* b1 = w1 + d_ * hidden_;
  const double* w2 = b1 + hidden_;
  double z = w2[hidden_];  // b2
  for (std::size_t j = 0; j < hidden_; ++j) {
    double a = b1[j];
    for (std::size_t i = 0; i < d_; ++i) a += w1[j * d_ + i] * x[i];
    z += w2[j] * std::tanh(a);
  }
  return logistic(z);
}

std::string ScorerModel::to_text() const {
  std::string out = "egrm-scorer " + std::to_string(kModelFormatVersion) + "\n";
  out += "d " + std::to_string(d_) + "\nhidden " + std::to_string(hidden_) + "\nseed " +
         std::to_string(seed_) + "\n";
  char buf[64];
  for (double p : params_) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p, std::chars_format::general, 17);
    out.append(buf, end);
    out += '\n';
  }
  return out;
}

ScorerModel ScorerModel::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag;
  int version = 0;
  std::size_t d = 0, hidden = 0;
  std::uint64_t seed = 0;
  std::string kd, kh, ks;
  if (!(in >> tag >> version) || tag != "egrm-scorer")
    throw ConfigError("scorer model: missing 'egrm-scorer' header");
  if (version != kModelFormatVersion)
    throw ConfigError("scorer model: unsupported format version " + std::to_string(version));
  if (!(in >> kd >> d >> kh >> hidden >> ks >> seed) || kd != "d" || kh != "hidden" || ks != "seed")
    throw ConfigError("scorer model: malformed header");
  if (d == 0 || hidden == 0) throw ConfigError("scorer model: d and hidden must be positive");

  ScorerModel model(d, hidden, seed);
  for (std::size_t i = 0; i < model.params_.size(); ++i) {
    std::string token;
    if (!(in >> token))
      throw ConfigError("scorer model: expected " + std::to_string(model.params_.size()) +
                        " parameters, found " + std::to_string(i));
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value))
      throw ConfigError("scorer model: bad parameter '" + token + "' at index " + std::to_string(i));
    model.params_[i] = value;
  }
  if (std::string extra; in >> extra) throw ConfigError("scorer model: trailing data");
  return model;
}

void ScorerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write scorer model to " + path.string());
  out << to_text();
  if (!out) throw ConfigError("failed writing scorer model to " + path.string());
}

ScorerModel ScorerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scorer model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

// ============================================================================
// Losses
// ============================================================================

void HybridLossConfig::validate() const {
  if (!(delta > 0.0)) throw ConfigError("hybrid loss: delta must be > 0");
  if (!(margin >= 0.0)) throw ConfigError("hybrid loss: margin must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("hybrid loss: alpha must lie in [0, 1]");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (steps == 0) throw ConfigError("train: steps must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (hidden == 0) throw ConfigError("train: hidden must be positive");
}

double huber(double q, double q_hat, double delta) {
  const double e = std::abs(q - q_hat);
  return e < delta ? 0.5 * e * e : delta * e - 0.5 * delta * delta;
}

double hinge(double q_hat_i, double q_hat_j, double margin) {
  return std::max(0.0, margin - (q_hat_i - q_hat_j));
}

std::vector<std::pair<std::size_t, std::size_t>> mine_pairs(std::span<const double> q,
                                                            double margin,
                                                            std::span<const std::size_t> groups) {
  if (!groups.empty() && groups.size() != q.size())
    throw UsageError("mine_pairs: groups and q differ in length");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (!groups.empty() && groups[i] != groups[j]) continue;
      if (q[i] > q[j] + margin) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

ScoredBatch make_batch(const std::vector<ScoredSample>& samples, std::size_t dim,
                       const consensus::TextRules& rules) {
  ScoredBatch batch;
  std::map<std::string, std::size_t> group_of;
  for (const auto& s : samples) {
    batch.features.push_back(extract_features(s.prompt().text(), s.response(), dim, rules));
    batch.q.push_back(s.reference_quality());
    auto [it, _] = group_of.emplace(s.prompt().id(), group_of.size());
    batch.group.push_back(it->second);
  }
  return batch;
}

ScoredBatch subset(const ScoredBatch& batch, std::span<const std::size_t> indices) {
  ScoredBatch out;
  for (std::size_t i : indices) {
    out.features.push_back(batch.features.at(i));
    out.q.push_back(batch.q.at(i));
    out.group.push_back(batch.group.at(i));
  }
  return out;
}

namespace {

/// Forward pass keeping the activations needed for backprop.
struct Forward {
  std::vector<double> hidden;  // tanh activations, one row per sample
  std::vector<double> q_hat;
};

Forward forward(const ScorerModel& model, const ScoredBatch& batch) {
  const std::size_t d = model.d(), h = model.hidden();
  const auto p = model.params();
  const double* w1 = p.data();
  const double* b1 = w1 + d * h;
  const double* w2 = b1 + h;
  const double b2 = w2[h];

  Forward fw;
  fw.hidden.resize(batch.size() * h);
  fw.q_hat.resize(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& x = batch.features[s].values;
    if (x.size() != d) throw UsageError("scorer: feature length does not match model d");
    double z = b2;
    for (std::size_t j = 0; j < h; ++j) {
      double a = b1[j];
      for (std::size_t i = 0; i < d; ++i) a += w1[j * d + i] * x[i];
      const double t = std::tanh(a);
      fw.hidden[s * h + j] = t;
      z += w2[j] * t;
    }
    fw.q_hat[s] = logistic(z);
  }
  return fw;
}

std::vector<std::pair<std::size_t, std::size_t>> batch_pairs(const ScoredBatch& batch,
                                                             const HybridLossConfig& cfg) {
  return cfg.grouped_mining ? mine_pairs(batch.q, cfg.margin, batch.group)
                            : mine_pairs(batch.q, cfg.margin);
}

LossBreakdown loss_from(const std::vector<double>& q_hat, const ScoredBatch& batch,
                        const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                        const HybridLossConfig& cfg) {
  LossBreakdown out;
  double huber_sum = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) huber_sum += huber(batch.q[s], q_hat[s], cfg.delta);
  out.huber_mean = huber_sum / static_cast<double>(batch.size());
  out.pairs = pairs.size();
  out.hinge_inactive = pairs.empty();
  if (!pairs.empty()) {
    double hinge_sum = 0.0;
    for (auto [i, j] : pairs) hinge_sum += hinge(q_hat[i], q_hat[j], cfg.margin);
    out.hinge_mean = hinge_sum / static_cast<double>(pairs.size());
  }
  out.loss = cfg.alpha * out.huber_mean + (1.0 - cfg.alpha) * out.hinge_mean;
  return out;
}

}  // namespace

LossBreakdown hybrid_loss(const ScorerModel& model, const ScoredBatch& batch,
                          const HybridLossConfig& config) {
  config.validate();
  if (batch.size() == 0) throw UsageError("hybrid_loss: batch must be nonempty");
  const auto fw = forward(model, batch);
  return loss_from(fw.q_hat, batch, batch_pairs(batch, config), config);
}

namespace {

std::vector<double> gradient_from(const ScorerModel& model, const ScoredBatch& batch,
                                  const Forward& fw,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                  const HybridLossConfig& cfg) {
  const std::size_t n = batch.size(), d = model.d(), h = model.hidden();
  // dL/dq̂ per sample.
  std::vector<double> dq(n, 0.0);
  const double huber_w = cfg.alpha / static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double e = batch.q[s] - fw.q_hat[s];
    const double d_huber = std::abs(e) <= cfg.delta ? -e : (e > 0.0 ? -cfg.delta : cfg.delta);
    dq[s] = huber_w * d_huber;
  }
  if (!pairs.empty()) {
    const double hinge_w = (1.0 - cfg.alpha) / static_cast<double>(pairs.size());
    for (auto [i, j] : pairs) {
      if (cfg.margin - (fw.q_hat[i] - fw.q_hat[j]) > 0.0) {
        dq[i] -= hinge_w;
        dq[j] += hinge_w;
      }
    }
  }

  std::vector<double> grad(model.parameter_count(), 0.0);
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + d * h;
  double* g_w2 = g_b1 + h;
  double& g_b2 = g_w2[h];
  const auto p = model.params();
  const double* w2 = p.data() + d * h + h;

  for (std::size_t s = 0; s < n; ++s) {
    const double dz = dq[s] * fw.q_hat[s] * (1.0 - fw.q_hat[s]);
    if (dz == 0.0) continue;
    g_b2 += dz;
    const auto& x = batch.features[s].values;
    for (std::size_t j = 0; j < h; ++j) {
      const double t = fw.hidden[s * h + j];
      g_w2[j] += dz * t;
      const double da = dz * w2[j] * (1.0 - t * t);
      g_b1[j] += da;
      for (std::size_t i = 0; i < d; ++i) g_w1[j * d + i] += da * x[i];
    }
  }
  return grad;
}

}  // namespace

std::vector<double> gradient(const ScorerModel& model, const ScoredBatch& batch,
                             const HybridLossConfig& config) {
  config.validate();
  if (batch.size() == 0) throw UsageError("gradient: batch must be nonempty");
  const auto fw = forward(model, batch);
  return gradient_from(model, batch, fw, batch_pairs(batch, config), config);
}

TrainResult train(const ScoredBatch& dataset, const HybridLossConfig& loss_cfg,
                  const TrainConfig& train_cfg) {
  loss_cfg.validate();
  train_cfg.validate();
  if (dataset.size() == 0) throw UsageError("train: dataset must be nonempty");
  const std::size_t d = dataset.features.front().size();

  TrainResult result{ScorerModel::initialized(d, train_cfg.hidden, train_cfg.seed), {}};
  result.loss_history.reserve(train_cfg.steps);

  // Sample indices per prompt group, in order of first appearance.
  std::map<std::size_t, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_group[dataset.group[i]].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [_, idx] : by_group) groups.push_back(std::move(idx));

  const bool full_batch = train_cfg.batch_size >= dataset.size();
  Rng rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(groups.size());
  std::size_t cursor = groups.size();  // forces a shuffle on first use

  // Pairs depend only on reference q, so the full-batch set is mined once.
  const auto full_pairs = full_batch ? batch_pairs(dataset, loss_cfg)
                                     : std::vector<std::pair<std::size_t, std::size_t>>{};

  for (std::size_t step = 0; step < train_cfg.steps; ++step) {
    ScoredBatch mini;
    const ScoredBatch* batch = &dataset;
    const auto* pairs = &full_pairs;
    std::vector<std::pair<std::size_t, std::size_t>> mini_pairs;
    if (!full_batch) {
      std::vector<std::size_t> picked;
      while (picked.size() < train_cfg.batch_size) {
        if (cursor == groups.size()) {
          std::iota(order.begin(), order.end(), std::size_t{0});
          rng.shuffle(order);
          cursor = 0;
        }
        const auto& g = groups[order[cursor++]];
        picked.insert(picked.end(), g.begin(), g.end());
      }
      mini = subset(dataset, picked);
      mini_pairs = batch_pairs(mini, loss_cfg);
      batch = &mini;
      pairs = &mini_pairs;
    }

    const auto fw = forward(result.model, *batch);
    const auto loss = loss_from(fw.q_hat, *batch, *pairs, loss_cfg);
    if (!std::isfinite(loss.loss)) throw TrainingError("scorer training diverged", step);
    result.loss_history.push_back(loss.loss);

    const auto grad = gradient_from(result.model, *batch, fw, *pairs, loss_cfg);
    auto params = result.model.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      params[k] -= train_cfg.learning_rate * grad[k];
      if (!std::isfinite(params[k])) throw TrainingError("scorer parameters became non-finite", step);
    }
  }
  return result;
}

TrainResult train(const std::vector<ScoredSample>& dataset, const HybridLossConfig& loss_cfg,
                  const TrainConfig& train_cfg, std::size_t dim,
                  const consensus::TextRules& rules) {
  return train(make_batch(dataset, dim, rules), loss_cfg, train_cfg);
}

}  // namespace egrm::scorer
