// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include "egrm/cli/commands.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "egrm/cli/io.hpp"
#include "egrm/pipeline.hpp"

namespace egrm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dump(const json& j, int indent = -1) {
  return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, end);
}

const fs::path& require_input(const CommandOptions& opts) {
  if (!opts.input) throw InputError("--input is required");
  return *opts.input;
}

void emit(const CommandOptions& opts, std::ostream& out, std::string_view content) {
  if (opts.output) {
    write_atomic(*opts.output, content);
  } else {
    out << content;
  }
}

std::size_t slot_limit(const EngineConfig& cfg) { return cfg.router.m + cfg.k; }

scorer::ScorerModel load_scorer(const EngineConfig& cfg) {
  if (!cfg.scorer_model) throw ConfigError("config: scorer.model is required for inference");
  if (!fs::exists(*cfg.scorer_model)) throw ConfigError("config: scorer model not found: " + cfg.scorer_model->string());
  return scorer::ScorerModel::load(*cfg.scorer_model);
}

}  // namespace

int cmd_route(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto prompts = read_prompts(require_input(opts));
  auto backend = make_backend(cfg.backend, slot_limit(cfg));
  const auto schedules = cfg.schedules();
  auto router = cfg.router;
  router.mode = consensus::RouterMode::Consensus;

  std::vector<json> lines;
  std::size_t failures = 0;
  for (const auto& prompt : prompts) {
    RunMetrics metrics;
    auto fo = cfg.fan_out();
    try {
      const auto probes = backends::fan_out(*backend, prompt, schedules.parallel, metrics, fo);
      std::vector<consensus::CanonicalAnswer> answers;
      for (const auto& p : probes)
        if (p.ok()) answers.push_back(consensus::canonicalize(consensus::extract_final_answer(p.result().text(), cfg.rules)));
      auto report = consensus::compute_consensus(answers);
      report.m = probes.size();
      report.consensus = static_cast<double>(report.max_count()) / static_cast<double>(report.m);
      report.route = consensus::route(report, router);
      auto j = pipeline::to_json(report);
      j["prompt_id"] = prompt.id();
      lines.push_back(std::move(j));
    } catch (const backends::FanOutError& ex) {
      ++failures;
      lines.push_back(pipeline::to_json(pipeline::PromptError{prompt.id(), ex.what(), ex.causes()}));
    }
  }
  emit(opts, out, to_jsonl(lines));
  if (failures > 0) {
    err << "route: " << failures << " prompt(s) failed\n";
    return kBackendError;
  }
  return kOk;
}

int cmd_infer(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto prompts = read_prompts(require_input(opts));
  const auto model = load_scorer(cfg);
  auto backend = make_backend(cfg.backend, slot_limit(cfg));

  pipeline::BatchOptions bo;
  bo.infer.rules = cfg.rules;
  bo.infer.fan_out = cfg.fan_out();
  bo.infer.feature_dim = cfg.feature_dim;
  bo.infer.forced_cot = opts.forced_cot;
  bo.parallel_prompts = cfg.parallel_prompts;
  const auto report = pipeline::run_batch(prompts, *backend, cfg.router, model, cfg.schedules(), bo);

  emit(opts, out, dump(pipeline::to_json(report), 2) + "\n");
  err << "infer: n=" << report.summary.n << " short_fraction=" << fmt(report.summary.short_fraction)
      << " calls=" << report.summary.calls << " tokens=" << report.summary.tokens << "\n";
  if (!report.errors.empty()) {
    err << "infer: " << report.errors.size() << " prompt(s) failed\n";
    return kBackendError;
  }
  return kOk;
}

int cmd_partition(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto prompts = read_prompts(require_input(opts));
  auto backend = make_backend(cfg.backend, slot_limit(cfg));
  std::unique_ptr<backends::Backend> teacher;
  if (cfg.teacher) teacher = make_backend(*cfg.teacher, 1);

  pipeline::PartitionOptions po;
  po.rules = cfg.rules;
  po.fan_out = cfg.fan_out();
  po.teacher_params = DecodeParams(0.0, 1.0, cfg.ranges.candidate_max_tokens, cfg.ranges.first_seed);
  const auto part = pipeline::partition_sft(prompts, *backend, cfg.router, cfg.schedules().parallel,
                                            teacher.get(), po);

  std::map<std::string, const consensus::ConsensusReport*> reports;
  for (const auto& r : part.reports) reports[r.prompt_id] = &r.report;
  std::vector<json> shorts, longs, errors;
  for (const auto& s : part.short_set)
    shorts.push_back({{"id", s.prompt.id()}, {"text", s.prompt.text()}, {"answer", s.answer},
                      {"consensus", reports.at(s.prompt.id())->consensus}});
  for (const auto& l : part.long_set)
    longs.push_back({{"id", l.prompt.id()}, {"text", l.prompt.text()}, {"chain", l.chain},
                     {"answer", l.answer}, {"consensus", reports.at(l.prompt.id())->consensus}});
  for (const auto& e : part.errors) errors.push_back(pipeline::to_json(e));

  const fs::path dir = opts.output.value_or(".");
  write_atomic(dir / "short.jsonl", [&] {
    std::string s;
    for (const auto& j : shorts) s += dump(j) + "\n";
    return s;
  }());
  write_atomic(dir / "long.jsonl", [&] {
    std::string s;
    for (const auto& j : longs) s += dump(j) + "\n";
    return s;
  }());
  write_atomic(dir / "errors.jsonl", [&] {
    std::string s;
    for (const auto& j : errors) s += dump(j) + "\n";
    return s;
  }());
  out << "short " << shorts.size() << "\nlong " << longs.size() << "\nerrors " << errors.size() << "\n";
  if (!errors.empty()) {
    err << "partition: " << errors.size() << " prompt(s) failed\n";
    return kBackendError;
  }
  return kOk;
}

int cmd_train_scorer(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto records = read_scored(require_input(opts));
  const std::vector<RawRecord> raw(records.begin(), records.end());
  const auto report = validate_dataset(raw);
  if (!report.valid()) {
    for (const auto& e : report.errors) err << "record " << e.index + 1 << ": " << e.message << "\n";
    return kInputError;
  }
  if (records.empty()) throw InputError("dataset is empty");

  const auto result = scorer::train(to_scored_samples(records), cfg.loss, cfg.train, cfg.feature_dim, cfg.rules);
  const fs::path model_path = opts.output.value_or(cfg.scorer_model.value_or("scorer.txt"));
  write_atomic(model_path, result.model.to_text());
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < result.loss_history.size(); ++i)
    csv += std::to_string(i) + "," + fmt(result.loss_history[i]) + "\n";
  fs::path csv_path = model_path;
  csv_path += ".loss.csv";
  write_atomic(csv_path, csv);
  out << "trained on " << records.size() << " samples; loss " << fmt(result.loss_history.front()) << " -> "
      << fmt(result.loss_history.back()) << "\n";
  return kOk;
}

rewards::ToyPreferenceData tokenize_pairs(const std::vector<RawPairRecord>& records, const EngineConfig& cfg) {
  const pipeline::ToyTokenizer tok(cfg.toy_vocab, cfg.toy_prompts);
  auto encode = [&](const std::string& text) {
    auto t = tok.encode(text, cfg.toy_max_len);
    while (t.size() < cfg.toy_max_len) t.push_back(0);
    return t;
  };

  rewards::ToyPreferenceData data;
  std::vector<rewards::Tokens> targets(cfg.toy_prompts);
  std::vector<bool> seen(cfg.toy_prompts, false);
  data.answers.assign(cfg.toy_prompts, 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    rewards::TokenPair pair{tok.prompt_context(r.prompt), encode(r.chosen), encode(r.rejected)};
    if (pair.preferred == pair.dispreferred)
      throw InputError("record " + std::to_string(i + 1) + " (" + r.id +
                       "): chosen and rejected coincide after toy tokenization");
    if (!seen[pair.prompt]) {
      seen[pair.prompt] = true;
      targets[pair.prompt] = pair.preferred;
      if (r.answer) {
        const auto a = tok.encode(*r.answer, 1);
        data.answers[pair.prompt] = a.empty() ? pair.preferred.back() : a.front();
      } else {
        data.answers[pair.prompt] = pair.preferred.back();
      }
    }
    data.pairs.push_back(std::move(pair));
  }
  data.scorer = rewards::reference_match_scorer(std::move(targets), cfg.toy_max_len);
  return data;
}

int cmd_grpo(const EngineConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  rewards::ToyPreferenceData data;
  std::optional<rewards::ToyPolicy> initial;
  if (opts.input) {
    const auto records = read_pairs(*opts.input);
    const std::vector<RawRecord> raw(records.begin(), records.end());
    const auto report = validate_dataset(raw);
    if (!report.valid()) {
      for (const auto& e : report.errors) err << "record " << e.index + 1 << ": " << e.message << "\n";
      return kInputError;
    }
    if (records.empty()) throw InputError("pairs file is empty");
    data = tokenize_pairs(records, cfg);
    initial = rewards::ToyPolicy::random(cfg.toy_vocab, cfg.toy_max_len, cfg.toy_prompts, cfg.grpo.seed);
  } else {
    auto task = rewards::make_toy_task(cfg.toy_pairs, cfg.toy_vocab, cfg.toy_max_len, cfg.toy_prompts, cfg.grpo.seed);
    data = std::move(task.data);
    initial = std::move(task.initial);
  }

  const auto result = rewards::train_grpo(data, *initial, opts.variant, cfg.grpo);
  const fs::path dir = opts.output.value_or(".");
  write_atomic(dir / "curves.csv", rewards::curves_csv(result));
  write_atomic(dir / "policy.txt", result.policy.to_text());
  const auto& last = result.curve.back();
  out << rewards::to_string(opts.variant) << ": steps " << result.curve.size() << ", final mean_preferred_prob "
      << fmt(last.mean_preferred_prob) << ", kl " << fmt(last.kl) << ", steps_to_0.8 " << result.steps_to_reach(0.8)
      << "\n";
  return kOk;
}

int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& /*err*/) {
  const auto& path = require_input(opts);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());

  if (path.extension() == ".csv") {
    std::string line;
    std::getline(in, line);
    if (line != "step,variant,objective,mean_preferred_prob,kl") throw InputError(path.string() + ": not a curves file");
    std::size_t steps = 0, reached = 0;
    std::string variant, final_prob, final_kl;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
      if (cols.size() != 5) throw InputError(path.string() + ": line " + std::to_string(steps + 2) + ": expected 5 columns");
      ++steps;
      variant = cols[1];
      final_prob = cols[3];
      final_kl = cols[4];
      if (reached == 0 && std::stod(cols[3]) > 0.8) reached = steps;
    }
    out << "variant " << variant << "\nsteps " << steps << "\nfinal_mean_preferred_prob " << final_prob
        << "\nfinal_kl " << final_kl << "\nsteps_to_0.8 " << (reached == 0 ? std::string("never") : std::to_string(reached))
        << "\n";
    return kOk;
  }

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw InputError(path.string() + ": " + ex.what());
  }
  if (!doc.contains("summary")) throw InputError(path.string() + ": not an infer report");
  const auto& s = doc.at("summary");
  const auto n = s.at("n").get<std::size_t>();
  out << "prompts " << n << "\nshort_fraction " << fmt(s.at("short_fraction").get<double>()) << "\ncalls "
      << s.at("calls").get<std::uint64_t>() << "\ntokens " << s.at("tokens").get<std::uint64_t>() << "\nerrors "
      << doc.value("errors", json::array()).size() << "\n";
  if (n > 0)
    out << "calls_per_prompt " << fmt(static_cast<double>(s.at("calls").get<std::uint64_t>()) / static_cast<double>(n))
        << "\n";
  return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"egrm: consensus-routed inference, scorer training and preference optimization"};
  app.require_subcommand(1);

  std::string config_path, input, output, variant = "standard";
  std::optional<std::uint64_t> seed;
  bool forced_cot = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "Engine config (JSON, comments allowed)");
    if (needs_config) c->required();
    sub->add_option("--input", input, "Input file");
    sub->add_option("--output", output, "Output file or directory");
    sub->add_option("--seed", seed, "Override every seed in the config");
  };
  auto* route = app.add_subcommand("route", "Consensus report per prompt");
  auto* infer = app.add_subcommand("infer", "Routed inference over a prompt file");
  auto* partition = app.add_subcommand("partition", "Split prompts into short and long SFT sets");
  auto* train = app.add_subcommand("train-scorer", "Train the response scorer");
  auto* grpo = app.add_subcommand("grpo", "Preference optimization on the toy policy");
  auto* report = app.add_subcommand("report", "Summarize an infer report or a curves file");
  for (auto* sub : {route, infer, partition, train, grpo}) add_common(sub, true);
  report->add_option("--input", input, "Report (.json) or curves (.csv)")->required();
  infer->add_flag("--forced-cot", forced_cot, "Generate candidates for every prompt");
  grpo->add_option("--variant", variant, "standard or extended")->check(CLI::IsMember({"standard", "extended"}));

  std::vector<std::string> argv_store{"egrm"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "egrm: " << ex.what() << "\n";
    return kInputError;
  }

  CommandOptions opts;
  if (!input.empty()) opts.input = input;
  if (!output.empty()) opts.output = output;
  opts.forced_cot = forced_cot;

  try {
    if (report->parsed()) return cmd_report(opts, out, err);
    opts.variant = rewards::variant_from_string(variant);
    auto cfg = load_config(config_path);
    if (seed) {
      cfg.set_seed(*seed);
      cfg.validate();
    }
    if (route->parsed()) return cmd_route(cfg, opts, out, err);
    if (infer->parsed()) return cmd_infer(cfg, opts, out, err);
    if (partition->parsed()) return cmd_partition(cfg, opts, out, err);
    if (train->parsed()) return cmd_train_scorer(cfg, opts, out, err);
    return cmd_grpo(cfg, opts, out, err);
  } catch (const TrainingError& ex) {
    err << "egrm: training diverged at step " << ex.step() << ": " << ex.what() << "\n";
    return kTrainingError;
  } catch (const backends::FanOutError& ex) {
    err << "egrm: backend failure: " << ex.what() << "\n";
    return kBackendError;
  } catch (const backends::TransportError& ex) {
    err << "egrm: backend failure: " << ex.what() << "\n";
    return kBackendError;
  } catch (const Error& ex) {
    err << "egrm: " << ex.what() << "\n";
    return kInputError;
  } catch (const std::exception& ex) {
    err << "egrm: internal error: " << ex.what() << "\n";
    return kInternal;
  }
}

}  // namespace egrm::cli
