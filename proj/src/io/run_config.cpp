// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/run_config.hpp"

#include <functional>
#include <map>

#include <json.hpp>

#include "lb/error.hpp"
#include "lb/io.hpp"
#include "lb/metrics.hpp"

namespace lb {

namespace {

using json = nlohmann::json;
using Setter = std::function<void(const json&)>;

// Applies each key of obj through its setter; anything unlisted is an error.
void apply_section(const json& obj, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string where = section.empty() ? it.key() : section + "." + it.key();
    auto s = setters.find(it.key());
    if (s == setters.end()) throw ConfigError("unknown config key '" + where + "'");
    try {
      s->second(*it);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for '" + where + "': " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& j) { field = j.get<T>(); };
}

json targets_json(const std::vector<Proj>& targets) {
  json a = json::array();
  for (Proj p : targets) a.push_back(std::string(proj_name(p)));
  return a;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  task.validate();
  if (pretrain.tokens < 10L * pretrain.seq_len) throw ConfigError("pretrain.tokens must be >= 10 * pretrain.seq_len");
  if (pretrain.seq_len < 16 || pretrain.seq_len > model.max_seq) {
    throw ConfigError("pretrain.seq_len must be in 16..model.max_seq");
  }
  if (!(pretrain.lr > 0.0f) || pretrain.epochs < 1 || pretrain.batch < 1) {
    throw ConfigError("pretrain.lr must be > 0, pretrain.epochs and pretrain.batch >= 1");
  }
  if (lora.rank < 1) throw ConfigError("lora.rank must be >= 1");
  if (lora.targets.empty()) throw ConfigError("lora.targets must not be empty");
  if (probe.n_tokens < 1 || probe.samples < 1) throw ConfigError("probe.n_tokens and probe.samples must be >= 1");
  if (sweep.m < 1) throw ConfigError("sweep.m must be >= 1");
  if (sweep.decode_budget < 1) throw ConfigError("sweep.decode_budget must be >= 1");
  if (!sweep.metric.empty()) {
    const Metric m = parse_metric(sweep.metric);
    if (!metric_compatible(m, task.task)) {
      throw ConfigError("sweep.metric " + sweep.metric + " does not apply to task " + std::string(task_name(task.task)));
    }
  }
  for (int k : sweep.ks) {
    if (k < 0 || k > model.n_layers) throw ConfigError("sweep.ks entry " + std::to_string(k) + " outside 0..L");
  }
  if (task.max_seq > model.max_seq) throw ConfigError("task.max_seq exceeds model.max_seq");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

std::string RunConfig::to_json() const {
  const json j{
      {"seed", seed},
      {"model", json::parse(canonical_config_json(model))},
      {"pretrain",
       {{"tokens", pretrain.tokens},
        {"seq_len", pretrain.seq_len},
        {"lr", pretrain.lr},
        {"epochs", pretrain.epochs},
        {"batch", pretrain.batch}}},
      {"train",
       {{"lr", train.lr},
        {"epochs", train.epochs},
        {"batch", train.batch},
        {"loss_mask_prompt", train.loss_mask_prompt},
        {"grad_clip", train.grad_clip}}},
      {"lora", {{"rank", lora.rank}, {"alpha", lora.alpha}, {"targets", targets_json(lora.targets)}}},
      {"task",
       {{"task", std::string(task_name(task.task))},
        {"train", task.sizes.train},
        {"validation", task.sizes.validation},
        {"test", task.sizes.test},
        {"domain", std::string(domain_name(task.domain))},
        {"facts_per_doc", task.facts_per_doc},
        {"hops", task.hops},
        {"bridge_ratio", task.bridge_ratio},
        {"comparison_ratio", task.comparison_ratio},
        {"min_turns", task.min_turns},
        {"max_turns", task.max_turns},
        {"max_seq", task.max_seq}}},
      {"probe", {{"n_tokens", probe.n_tokens}, {"samples", probe.samples}}},
      {"sweep",
       {{"m", sweep.m},
        {"metric", sweep.metric},
        {"decode_budget", sweep.decode_budget},
        {"coarse_to_fine", sweep.coarse_to_fine},
        {"ks", sweep.ks}}},
  };
  return j.dump(2) + "\n";
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  std::string task_name_s(task_name(c.task.task)), domain_s(domain_name(c.task.domain));
  std::vector<std::string> targets;
  bool targets_set = false;

  apply_section(root, "",
                {{"seed", set(c.seed)},
                 {"model", [&](const json& j) { c.model = config_from_json(j.dump()); }},
                 {"pretrain",
                  [&](const json& j) {
                    apply_section(j, "pretrain",
                                  {{"tokens", set(c.pretrain.tokens)},
                                   {"seq_len", set(c.pretrain.seq_len)},
                                   {"lr", set(c.pretrain.lr)},
                                   {"epochs", set(c.pretrain.epochs)},
                                   {"batch", set(c.pretrain.batch)}});
                  }},
                 {"train",
                  [&](const json& j) {
                    apply_section(j, "train",
                                  {{"lr", set(c.train.lr)},
                                   {"epochs", set(c.train.epochs)},
                                   {"batch", set(c.train.batch)},
                                   {"loss_mask_prompt", set(c.train.loss_mask_prompt)},
                                   {"grad_clip", set(c.train.grad_clip)}});
                  }},
                 {"lora",
                  [&](const json& j) {
                    apply_section(j, "lora",
                                  {{"rank", set(c.lora.rank)},
                                   {"alpha", set(c.lora.alpha)},
                                   {"targets", [&](const json& t) {
                                      targets = t.get<std::vector<std::string>>();
                                      targets_set = true;
                                    }}});
                  }},
                 {"task",
                  [&](const json& j) {
                    apply_section(j, "task",
                                  {{"task", set(task_name_s)},
                                   {"train", set(c.task.sizes.train)},
                                   {"validation", set(c.task.sizes.validation)},
                                   {"test", set(c.task.sizes.test)},
                                   {"domain", set(domain_s)},
                                   {"facts_per_doc", set(c.task.facts_per_doc)},
                                   {"hops", set(c.task.hops)},
                                   {"bridge_ratio", set(c.task.bridge_ratio)},
                                   {"comparison_ratio", set(c.task.comparison_ratio)},
                                   {"min_turns", set(c.task.min_turns)},
                                   {"max_turns", set(c.task.max_turns)},
                                   {"max_seq", set(c.task.max_seq)}});
                  }},
                 {"probe",
                  [&](const json& j) {
                    apply_section(j, "probe", {{"n_tokens", set(c.probe.n_tokens)}, {"samples", set(c.probe.samples)}});
                  }},
                 {"sweep", [&](const json& j) {
                    apply_section(j, "sweep",
                                  {{"m", set(c.sweep.m)},
                                   {"metric", set(c.sweep.metric)},
                                   {"decode_budget", set(c.sweep.decode_budget)},
                                   {"coarse_to_fine", set(c.sweep.coarse_to_fine)},
                                   {"ks", set(c.sweep.ks)}});
                  }}});

  c.task.task = parse_task(task_name_s);
  c.task.domain = parse_domain(domain_s);
  if (targets_set) {
    c.lora.targets.clear();
    for (const auto& t : targets) c.lora.targets.push_back(parse_proj(t));
  }
  c.validate();
  return c;
}

}  // namespace lb
