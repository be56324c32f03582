// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Text artifacts: JSONL datasets, JSON + TSV reports and run manifests.
// Numbers are written in shortest round-trip form, the same in JSON and TSV,
// so a TSV cell parses back to exactly the JSON value. Emission is a pure
// function of the artifact, so re-emitting a loaded artifact is byte-identical.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lb/boundary.hpp"
#include "lb/probe.hpp"

namespace lb {

// ---- datasets: one JSON object per line with the text fields; token ids are
// rebuilt from the vocabulary on load.
std::string samples_jsonl(const std::vector<Sample>& samples);
std::vector<Sample> parse_samples_jsonl(const std::string& text, const Vocab& vocab);  // throws ParseError
// Writes train/validation/test .jsonl, vocab.txt and dataset.json into dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
std::vector<Sample> load_split(const std::filesystem::path& dir, const std::string& split);

// ---- probe reports
std::string probe_json(const ProbeReport& r);
std::string probe_tsv(const ProbeReport& r);
ProbeReport parse_probe_json(const std::string& text);  // throws ParseError

struct ProbeDiff {
  std::string ours_config, baseline_config, sample_set;
  Tensor diff;  // [L x n_tokens]
  bool operator==(const ProbeDiff&) const = default;
};
ProbeDiff make_probe_diff(const ProbeReport& ours, const ProbeReport& baseline);
std::string diff_json(const ProbeDiff& d);
std::string diff_tsv(const ProbeDiff& d);
ProbeDiff parse_diff_json(const std::string& text);

// ---- boundary decisions
std::string decision_json(const BoundaryDecision& d, const std::vector<double>& curve = {});
std::string decision_tsv(const BoundaryDecision& d);
BoundaryDecision parse_decision_json(const std::string& text);

// ---- evaluation
struct EvalRecord {
  std::string task, split, metric, adapters;  // adapters: description of the set used
  int keep_bottom = -1;                       // -1 when every adapter was active
  double score = 0;                           // [0, 1]
  int sample_count = 0;
  std::vector<double> per_sample;
  std::vector<std::string> predictions;
  bool operator==(const EvalRecord&) const = default;
};
std::string eval_json(const EvalRecord& e);
std::string eval_tsv(const EvalRecord& e);
EvalRecord parse_eval_json(const std::string& text);

// ---- provenance
struct Manifest {
  std::string command;
  std::map<std::string, std::string> args;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> sha256 of contents
  std::map<std::string, std::string> outputs;  // path -> sha256 of contents
  std::string config_json;                     // the resolved RunConfig
};
// Hashes the listed files and adds format and tool versions.
std::string manifest_json(const Manifest& m);

// Shortest round-trip decimal form of x.
std::string format_number(double x);

}  // namespace lb
