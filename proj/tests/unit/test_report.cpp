// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <sstream>

#include "lb/error.hpp"
#include "lb/io.hpp"
#include "lb/report.hpp"
#include "lb/run_config.hpp"

using namespace lb;

namespace {

std::vector<std::vector<std::string>> tsv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, '\t')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

ProbeReport random_report(int L, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ProbeReport r;
  r.n_layers = L;
  r.n_tokens = n;
  r.gt_curve = Tensor({L, n});
  r.max_curve = Tensor({L, n});
  for (std::size_t i = 0; i < r.gt_curve.data.size(); ++i) {
    r.gt_curve.data[i] = u(rng) / 3;
    r.max_curve.data[i] = r.gt_curve.data[i] + u(rng) / 3;
  }
  r.sample_count = 100;
  r.config = "model=abc;adapters=1-4;targets=2;mask=1111";
  r.sample_set = "deadbeef";
  r.warnings = {"sample 3 rejected: reference shorter than 4 tokens"};
  return r;
}

}  // namespace

TEST_CASE("run config: defaults and round trip", "[run_config]") {
  const RunConfig d = default_run_config();
  CHECK(d.train.lr == 3e-3f);
  CHECK(TrainConfig{}.lr == 1e-4f);
  CHECK(d.train.epochs == 3);
  CHECK(d.lora.rank == 8);
  CHECK(d.sweep.m == 500);
  CHECK(d.probe.n_tokens == 4);
  CHECK(d.probe.samples == 100);

  const RunConfig empty = parse_run_config("{}");
  CHECK(empty.to_json() == d.to_json());

  RunConfig c = parse_run_config(R"({"seed": 9, "lora": {"rank": 4, "targets": ["q","k","down"]},
                                     "task": {"task": "arith", "train": 10},
                                     "sweep": {"ks": [0, 3, 6], "metric": "em-final"}})");
  CHECK(c.seed == 9);
  CHECK(c.lora.rank == 4);
  CHECK(c.lora.targets == std::vector<Proj>{Proj::q, Proj::k, Proj::down});
  CHECK(c.task.task == Task::arith);
  CHECK(c.task.sizes.train == 10);
  CHECK(parse_run_config(c.to_json()).to_json() == c.to_json());
  CHECK(c.train_config().seed == 9);
}

TEST_CASE("run config: errors", "[run_config]") {
  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
  CHECK_THROWS_WITH(parse_run_config(R"({"trian": {}})"), Catch::Matchers::ContainsSubstring("trian"));
  CHECK_THROWS_WITH(parse_run_config(R"({"train": {"learning_rate": 1}})"),
                    Catch::Matchers::ContainsSubstring("train.learning_rate"));
  CHECK_THROWS_AS(parse_run_config(R"({"lora": {"rank": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"lora": {"targets": ["x"]}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"lr": "fast"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"sweep": {"ks": [13]}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"task": {"task": "kvqa"}, "sweep": {"metric": "em-final"}})"), ConfigError);
}

TEST_CASE("probe report: JSON re-emission is byte-identical and TSV matches", "[report]") {
  const ProbeReport r = random_report(12, 4, 1);
  const std::string j = probe_json(r);
  const ProbeReport back = parse_probe_json(j);
  CHECK(back == r);
  CHECK(probe_json(back) == j);

  const auto rows = tsv_rows(probe_tsv(r));
  REQUIRE(rows.size() == 13);  // header + L
  REQUIRE(rows[0].size() == 1 + 2 * 4);
  for (int l = 0; l < 12; ++l) {
    CHECK(std::stoi(rows[l + 1][0]) == l + 1);
    for (int i = 0; i < 4; ++i) {
      CHECK(static_cast<float>(std::stod(rows[l + 1][1 + i])) == r.gt_curve.data[l * 4 + i]);
      CHECK(static_cast<float>(std::stod(rows[l + 1][5 + i])) == r.max_curve.data[l * 4 + i]);
    }
  }
  CHECK_THROWS_AS(parse_probe_json("{\"kind\": \"probe\"}"), ParseError);
  CHECK_THROWS_AS(parse_probe_json("not json"), ParseError);
}

TEST_CASE("probe difference report", "[report]") {
  ProbeReport a = random_report(6, 4, 2), b = random_report(6, 4, 3);
  b.config = "model=abc;adapters=none;targets=0;mask=111111";
  const ProbeDiff d = make_probe_diff(a, b);
  for (std::size_t i = 0; i < d.diff.data.size(); ++i) {
    CHECK(d.diff.data[i] == a.gt_curve.data[i] - b.gt_curve.data[i]);
  }
  CHECK(parse_diff_json(diff_json(d)) == d);
  CHECK(diff_json(parse_diff_json(diff_json(d))) == diff_json(d));
  CHECK(tsv_rows(diff_tsv(d)).size() == 7);
  b.sample_set = "other";
  CHECK_THROWS_AS(make_probe_diff(a, b), ComparisonError);
}

TEST_CASE("boundary decision: sweep TSV has L+1 rows and round trips", "[report]") {
  BoundaryDecision d;
  d.n_layers = 12;
  for (int k = 0; k <= 12; ++k) d.per_k_scores[k] = 0.1 + 0.05 * k - 0.004 * k * k;
  d.k_star = best_k(d.per_k_scores);
  d.metric = "em";
  d.m = 500;
  d.method = "sweep";
  d.seed = 17;
  d.fingerprint = std::string(64, 'a');
  const std::string j = decision_json(d);
  const BoundaryDecision back = parse_decision_json(j);
  CHECK(back == d);
  CHECK(decision_json(back) == j);

  const auto rows = tsv_rows(decision_tsv(d));
  REQUIRE(rows.size() == 14);  // header + K = 0..L
  int selected = 0;
  for (int k = 0; k <= 12; ++k) {
    CHECK(std::stoi(rows[k + 1][0]) == k);
    CHECK(std::stod(rows[k + 1][1]) == d.per_k_scores.at(k));
    if (rows[k + 1][2] == "1") {
      ++selected;
      CHECK(k == d.k_star);
    }
  }
  CHECK(selected == 1);

  // The optional knee curve does not disturb parsing.
  CHECK(parse_decision_json(decision_json(d, {0.1, 0.2, 0.9})) == d);
}

TEST_CASE("eval record round trip", "[report]") {
  EvalRecord e;
  e.task = "kvqa";
  e.split = "test";
  e.metric = "em";
  e.adapters = "layers 1..5 targets q,v rank 8";
  e.keep_bottom = 5;
  e.per_sample = {1, 0, 1, 1 / 3.0};
  e.predictions = {"a1", "b \"quoted\"", "c\td", ""};
  e.sample_count = 4;
  e.score = (1 + 0 + 1 + 1 / 3.0) / 4;
  const std::string j = eval_json(e);
  CHECK(parse_eval_json(j) == e);
  CHECK(eval_json(parse_eval_json(j)) == j);
  const auto rows = tsv_rows(eval_tsv(e));
  REQUIRE(rows.size() == 5);
  CHECK(std::stod(rows[4][1]) == e.per_sample[3]);
}

TEST_CASE("format_number is shortest round-trip", "[report]") {
  for (double x : {0.0, 1.0, 0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 0.30000000000000004}) {
    CHECK(std::stod(format_number(x)) == x);
  }
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("dataset JSONL round trip", "[report]") {
  for (Task t : {Task::kvqa, Task::arith, Task::cipher, Task::summary, Task::respsel}) {
    TaskConfig tc;
    tc.task = t;
    tc.sizes = {12, 6, 6};
    const Dataset ds = generate_dataset(tc, 42);
    const auto back = parse_samples_jsonl(samples_jsonl(ds.train), default_vocab());
    CHECK(back == ds.train);
  }
  TaskConfig tc;
  tc.sizes = {8, 4, 4};
  const Dataset ds = generate_dataset(tc, 5);
  const auto dir = std::filesystem::temp_directory_path() / "lb_report_dataset";
  std::filesystem::remove_all(dir);
  save_dataset(dir, ds);
  CHECK(load_split(dir, "train") == ds.train);
  CHECK(load_split(dir, "validation") == ds.validation);
  CHECK(load_split(dir, "test") == ds.test);
  CHECK_THROWS_AS(load_split(dir, "dev"), Error);
  CHECK_THROWS_AS(parse_samples_jsonl("{\"prompt\": 1}\n", default_vocab()), ParseError);
  std::filesystem::remove_all(dir);
}
