// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "egrm/cli/commands.hpp"
#include "egrm/cli/io.hpp"
#include "egrm/synthetic.hpp"
#include "fixtures.hpp"

using namespace egrm;
using namespace egrm::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = test::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    corpus = test::make_routing_corpus(12, 5);
    config = test::write_cli_fixture(dir, corpus).string();
    prompts = (dir / "prompts.jsonl").string();
  }
  fs::path dir;
  test::RoutingCorpus corpus;
  std::string config, prompts;
};

}  // namespace

TEST_F(CliTest, RouteEmitsOneLinePerPrompt) {
  const auto r = run({"route", "--config", config, "--input", prompts});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::istringstream in(r.out);
  std::size_t n = 0, shorts = 0;
  for (std::string line; std::getline(in, line); ++n) shorts += json::parse(line).dump().find("\"short\"") != std::string::npos;
  EXPECT_EQ(n, 12u);
  EXPECT_EQ(shorts, 5u);
}

TEST_F(CliTest, InferWritesReport) {
  const auto out = (dir / "report.json").string();
  ASSERT_EQ(run({"infer", "--config", config, "--input", prompts, "--output", out}).code, kOk);
  const auto j = json::parse(test::read_file(out));
  EXPECT_EQ(j["summary"]["n"], 12);
  EXPECT_EQ(j["summary"]["calls"], 12 * 5 + 7 * 8);
  EXPECT_EQ(j["outcomes"].size(), 12u);
  EXPECT_FALSE(fs::exists(out + ".tmp"));

  const auto forced = run({"infer", "--config", config, "--input", prompts, "--forced-cot"});
  ASSERT_EQ(forced.code, kOk);
  EXPECT_EQ(json::parse(forced.out)["summary"]["calls"], 12 * 13);

  const auto rep = run({"report", "--input", out});
  EXPECT_EQ(rep.code, kOk);
  EXPECT_FALSE(rep.out.empty());
}

TEST_F(CliTest, SeedOverrideChangesNothingForScriptedBackend) {
  const auto a = run({"infer", "--config", config, "--input", prompts, "--seed", "7"});
  const auto b = run({"infer", "--config", config, "--input", prompts, "--seed", "7"});
  ASSERT_EQ(a.code, kOk);
  auto ja = json::parse(a.out), jb = json::parse(b.out);
  ja["summary"].erase("wall_ms");
  jb["summary"].erase("wall_ms");
  EXPECT_EQ(ja, jb);
}

TEST_F(CliTest, PartitionWritesThreeFiles) {
  const auto out = dir / "sft";
  const auto r = run({"partition", "--config", config, "--input", prompts, "--output", out.string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  auto lines = [](const fs::path& p) {
    std::istringstream in(test::read_file(p));
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) n += !l.empty();
    return n;
  };
  EXPECT_EQ(lines(out / "short.jsonl"), 5u);
  EXPECT_EQ(lines(out / "long.jsonl"), 7u);
  EXPECT_EQ(lines(out / "errors.jsonl"), 0u);
}

TEST_F(CliTest, TrainScorerThenInfer) {
  synthetic::ScoredRecipe recipe;
  recipe.prompts = 10;
  std::string scored;
  for (const auto& s : synthetic::scored_dataset(recipe))
    scored += json{{"id", s.prompt().id()}, {"prompt", s.prompt().text()}, {"response", s.response()},
                   {"q", s.reference_quality()}}.dump() + "\n";
  write(dir / "scored.jsonl", scored);
  const auto model = (dir / "trained.txt").string();
  const auto r = run({"train-scorer", "--config", config, "--input", (dir / "scored.jsonl").string(), "--output", model});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NO_THROW(scorer::ScorerModel::load(model));
  EXPECT_NE(test::read_file(model + ".loss.csv").rfind("step,loss", 0), std::string::npos);
}

TEST_F(CliTest, TrainScorerRejectsInvalidRecords) {
  write(dir / "bad.jsonl", R"({"id":"a","response":"r","q":1.5})" "\n" R"({"id":"a","response":"r","q":0.5})" "\n");
  const auto r = run({"train-scorer", "--config", config, "--input", (dir / "bad.jsonl").string(), "--output",
                      (dir / "m.txt").string()});
  EXPECT_EQ(r.code, kInputError);
  EXPECT_NE(r.err.find("record 1"), std::string::npos);
  EXPECT_NE(r.err.find("record 2"), std::string::npos);
}

TEST_F(CliTest, GrpoOnToyTaskAndPairs) {
  const auto out = dir / "grpo";
  ASSERT_EQ(run({"grpo", "--config", config, "--variant", "extended", "--output", out.string()}).code, kOk);
  const auto csv = test::read_file(out / "curves.csv");
  EXPECT_EQ(csv.rfind("step,", 0), 0u);
  EXPECT_TRUE(fs::exists(out / "policy.txt"));
  EXPECT_EQ(run({"report", "--input", (out / "curves.csv").string()}).code, kOk);

  write(dir / "pairs.jsonl", R"({"id":"a","prompt":"2+2?","chosen":"four is right","rejected":"five maybe wrong","answer":"right"})" "\n");
  EXPECT_EQ(run({"grpo", "--config", config, "--input", (dir / "pairs.jsonl").string(), "--output",
                 (dir / "g2").string()}).code,
            kOk);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"infer", "--config", (dir / "missing.json").string(), "--input", prompts}).code, kInputError);
  write(dir / "broken.jsonl", "{\"id\": \"a\", \"text\": \"b\"}\nnot json\n");
  const auto bad = run({"route", "--config", config, "--input", (dir / "broken.jsonl").string()});
  EXPECT_EQ(bad.code, kInputError);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);
  EXPECT_EQ(run({"bogus"}).code, kInputError);
  EXPECT_EQ(run({"grpo", "--config", config, "--variant", "sideways"}).code, kInputError);

  auto cfg = json::parse(test::read_file(config));
  cfg["defaults"]["typo_key"] = 1;
  write(dir / "typo.json", cfg.dump());
  EXPECT_EQ(run({"route", "--config", (dir / "typo.json").string(), "--input", prompts}).code, kInputError);

  cfg = json::parse(test::read_file(config));
  cfg["backend"] = {{"kind", "http"}, {"endpoint", "http://127.0.0.1:9/v1"}, {"timeout_ms", 200}};
  write(dir / "http.json", cfg.dump());
  EXPECT_EQ(run({"infer", "--config", (dir / "http.json").string(), "--input", prompts}).code, kBackendError);

}

TEST(Io, WriteAtomicAndJsonl) {
  const auto dir = test::temp_dir("io");
  write_atomic(dir / "a.txt", "hello");
  EXPECT_EQ(test::read_file(dir / "a.txt"), "hello");
  write_atomic(dir / "a.txt", "again");
  EXPECT_EQ(test::read_file(dir / "a.txt"), "again");
  EXPECT_EQ(to_jsonl({json{{"a", 1}}, json{{"b", 2}}}), "{\"a\":1}\n{\"b\":2}\n");
  write(dir / "p.jsonl", "\n{\"id\":\"x\",\"text\":\"y\",\"ground_truth\":\"z\"}\n\n");
  const auto p = read_prompts(dir / "p.jsonl");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].ground_truth().value(), "z");
  write(dir / "q.jsonl", "{\"id\":\"x\"}\n");
  EXPECT_THROW(read_prompts(dir / "q.jsonl"), InputError);
  EXPECT_THROW(read_jsonl(dir / "none.jsonl"), InputError);
}

TEST(Config, DefaultsAndOverrides) {
  const auto dir = test::temp_dir("config");
  const auto corpus = test::make_routing_corpus(2, 1);
  auto cfg = load_config(test::write_cli_fixture(dir, corpus));
  EXPECT_EQ(cfg.router.m, 5u);
  EXPECT_DOUBLE_EQ(cfg.router.tau, 0.8);
  EXPECT_EQ(cfg.k, 8u);
  EXPECT_EQ(cfg.max_in_flight, 4u);
  EXPECT_EQ(cfg.grpo.steps, 60u);
  cfg.set_seed(99);
  EXPECT_EQ(cfg.grpo.seed, 99u);
  EXPECT_EQ(cfg.train.seed, 99u);
  EXPECT_EQ(cfg.schedules().parallel[0].seed(), 99u);
  EXPECT_EQ(cfg.fan_out().max_in_flight, 4u);

  const auto base = config_from_json(json::parse(R"({"backend": {"kind": "scripted", "script": "script.json"}})"), dir);
  EXPECT_EQ(base.router.m, 5u);
  EXPECT_DOUBLE_EQ(base.loss.alpha, 0.7);
  EXPECT_THROW(config_from_json(json::parse(R"({"defaults": {"tau": 1.5}})"), dir), ConfigError);
}

TEST(Config, ShippedExampleLoads) {
  const fs::path shipped = fs::path(EGRM_SOURCE_DIR) / "tools" / "configs" / "egrm.jsonc";
  const auto cfg = load_config(shipped);
  EXPECT_EQ(cfg.router.m, 5u);
  EXPECT_EQ(cfg.grpo.steps, 500u);
}
