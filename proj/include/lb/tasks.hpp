// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic task generators. Each task pairs a prompt the model must read
// with an answer template it must learn to produce, and ships an oracle that
// solves it from the prompt text alone.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lb/vocab.hpp"

namespace lb {

enum class Task { kvqa, arith, cipher, summary, respsel };
enum class Domain { in_domain, ood_a, ood_b };
enum class QType { none, bridge, comparison };

std::string_view task_name(Task t);
Task parse_task(std::string_view s);  // throws ConfigError
std::string_view domain_name(Domain d);
Domain parse_domain(std::string_view s);
std::string_view qtype_name(QType q);
QType parse_qtype(std::string_view s);

struct Sample {
  std::vector<int> prompt;     // starts with bos
  std::vector<int> reference;  // ends with eos
  std::string prompt_text;     // without bos
  std::string reference_text;  // without eos
  std::string label;           // gold string the task metric compares against
  Task task = Task::kvqa;
  Domain domain = Domain::in_domain;
  QType qtype = QType::none;

  bool operator==(const Sample&) const = default;
};

struct SplitSizes {
  int train = 2000;
  int validation = 500;
  int test = 500;
};

struct TaskConfig {
  Task task = Task::kvqa;
  SplitSizes sizes;
  Domain domain = Domain::in_domain;  // cipher only
  // kvqa
  int facts_per_doc = 3;
  int hops = 2;
  double bridge_ratio = 0.35;
  double comparison_ratio = 0.35;
  // summary
  int min_turns = 3;
  int max_turns = 5;
  int max_seq = 128;

  void validate() const;  // throws ConfigError
};

struct Dataset {
  TaskConfig config;
  std::uint64_t seed = 0;
  std::vector<Sample> train, validation, test;

  // "train", "validation" or "test"; throws ConfigError otherwise.
  const std::vector<Sample>& split(std::string_view name) const;
  std::vector<Sample>& split(std::string_view name);
};

// Pure functions of (seed, config). Splits never share a prompt string.
Dataset generate_dataset(const TaskConfig& cfg, std::uint64_t seed);
Dataset gen_kvqa(const TaskConfig& cfg, std::uint64_t seed);
Dataset gen_arith(const TaskConfig& cfg, std::uint64_t seed);
Dataset gen_cipher_mt(const TaskConfig& cfg, std::uint64_t seed);
Dataset gen_salient_summary(const TaskConfig& cfg, std::uint64_t seed);
Dataset gen_resp_select(const TaskConfig& cfg, std::uint64_t seed);

// Rule-based solver reading only the prompt text. Its output has the same
// form as reference_text.
std::string oracle_output(const Sample& s);

// Builds the token form of a sample from its text fields.
Sample make_sample(const Vocab& vocab, std::string prompt_text, std::string reference_text, std::string label,
                   Task task, Domain domain = Domain::in_domain, QType qtype = QType::none);

// Next-token pretraining sequences (each starts with bos, ends with eos,
// at most seq_len tokens) totalling at least n_tokens tokens. Mixes
// subject-verb-object sentences, key/value stanzas, arithmetic facts,
// glossary lines and short dialogues.
std::vector<std::vector<int>> gen_pretrain_corpus(std::uint64_t seed, long n_tokens, int seq_len);

}  // namespace lb
