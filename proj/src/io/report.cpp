// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/report.hpp"

#include <sstream>

#include <json.hpp>

#include "lb/error.hpp"
#include "lb/io.hpp"
#include "lb/metrics.hpp"

namespace lb {

namespace {

using json = nlohmann::json;

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

template <typename F>
auto read_fields(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

json matrix_json(const Tensor& t) {
  json rows = json::array();
  for (int r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (float v : t.row(r)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  if (rows == 0) throw ParseError("empty matrix");
  const int cols = static_cast<int>(j.at(0).size());
  Tensor t({rows, cols});
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j.at(r).size()) != cols) throw ParseError("ragged matrix");
    for (int c = 0; c < cols; ++c) t.at(r, c) = j.at(r).at(c).get<float>();
  }
  return t;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_number(double x) { return json(x).dump(); }

// ---------------------------------------------------------------- datasets

std::string samples_jsonl(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    const json j{{"prompt", s.prompt_text},
                 {"reference", s.reference_text},
                 {"label", s.label},
                 {"task", std::string(task_name(s.task))},
                 {"domain", std::string(domain_name(s.domain))},
                 {"qtype", std::string(qtype_name(s.qtype))}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Sample> parse_samples_jsonl(const std::string& text, const Vocab& vocab) {
  std::vector<Sample> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back(make_sample(vocab, j.at("prompt").get<std::string>(), j.at("reference").get<std::string>(),
                                j.at("label").get<std::string>(), parse_task(j.at("task").get<std::string>()),
                                parse_domain(j.at("domain").get<std::string>()),
                                parse_qtype(j.at("qtype").get<std::string>())));
    } catch (const json::exception& e) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  for (const char* split : {"train", "validation", "test"}) {
    atomic_write(dir / (std::string(split) + ".jsonl"), samples_jsonl(ds.split(split)));
  }
  const Vocab& v = default_vocab();
  std::string vocab_text;
  for (int i = 0; i < v.size(); ++i) vocab_text += v.token(i) + "\n";
  atomic_write(dir / "vocab.txt", vocab_text);
  const auto& c = ds.config;
  const json meta{{"task", std::string(task_name(c.task))},
                  {"domain", std::string(domain_name(c.domain))},
                  {"seed", ds.seed},
                  {"sizes", {{"train", c.sizes.train}, {"validation", c.sizes.validation}, {"test", c.sizes.test}}},
                  {"normalization", std::string(kNormalizationVersion)}};
  atomic_write(dir / "dataset.json", dump(meta));
}

std::vector<Sample> load_split(const std::filesystem::path& dir, const std::string& split) {
  if (split != "train" && split != "validation" && split != "test") {
    throw ConfigError("unknown split '" + split + "' (train, validation, test)");
  }
  return parse_samples_jsonl(read_file(dir / (split + ".jsonl")), default_vocab());
}

// ---------------------------------------------------------------- probe

std::string probe_json(const ProbeReport& r) {
  const json j{{"kind", "probe"},
               {"n_layers", r.n_layers},
               {"n_tokens", r.n_tokens},
               {"sample_count", r.sample_count},
               {"config", r.config},
               {"sample_set", r.sample_set},
               {"warnings", r.warnings},
               {"gt_curve", matrix_json(r.gt_curve)},
               {"max_curve", matrix_json(r.max_curve)}};
  return dump(j);
}

std::string probe_tsv(const ProbeReport& r) {
  std::string out = "layer";
  for (int i = 1; i <= r.n_tokens; ++i) out += "\tgt_" + std::to_string(i);
  for (int i = 1; i <= r.n_tokens; ++i) out += "\tmax_" + std::to_string(i);
  out += "\n";
  for (int l = 0; l < r.n_layers; ++l) {
    out += std::to_string(l + 1);
    for (int i = 0; i < r.n_tokens; ++i) out += "\t" + format_number(r.gt_curve.at(l, i));
    for (int i = 0; i < r.n_tokens; ++i) out += "\t" + format_number(r.max_curve.at(l, i));
    out += "\n";
  }
  return out;
}

ProbeReport parse_probe_json(const std::string& text) {
  const json j = parse_or_throw(text, "probe report");
  return read_fields("probe report", [&] {
    if (j.at("kind") != "probe") throw ParseError("not a probe report");
    ProbeReport r;
    r.n_layers = j.at("n_layers").get<int>();
    r.n_tokens = j.at("n_tokens").get<int>();
    r.sample_count = j.at("sample_count").get<int>();
    r.config = j.at("config").get<std::string>();
    r.sample_set = j.at("sample_set").get<std::string>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.gt_curve = matrix_from_json(j.at("gt_curve"));
    r.max_curve = matrix_from_json(j.at("max_curve"));
    if (r.gt_curve.dims != Dims{r.n_layers, r.n_tokens} || r.max_curve.dims != r.gt_curve.dims) {
      throw ParseError("probe report curves do not match n_layers x n_tokens");
    }
    return r;
  });
}

ProbeDiff make_probe_diff(const ProbeReport& ours, const ProbeReport& baseline) {
  return {ours.config, baseline.config, ours.sample_set, probe_difference(ours, baseline)};
}

std::string diff_json(const ProbeDiff& d) {
  const json j{{"kind", "probe-difference"},
               {"ours", d.ours_config},
               {"baseline", d.baseline_config},
               {"sample_set", d.sample_set},
               {"diff", matrix_json(d.diff)}};
  return dump(j);
}

std::string diff_tsv(const ProbeDiff& d) {
  std::string out = "layer";
  for (int i = 1; i <= d.diff.cols(); ++i) out += "\tdiff_" + std::to_string(i);
  out += "\n";
  for (int l = 0; l < d.diff.rows(); ++l) {
    out += std::to_string(l + 1);
    for (float v : d.diff.row(l)) out += "\t" + format_number(v);
    out += "\n";
  }
  return out;
}

ProbeDiff parse_diff_json(const std::string& text) {
  const json j = parse_or_throw(text, "probe difference");
  return read_fields("probe difference", [&] {
    if (j.at("kind") != "probe-difference") throw ParseError("not a probe difference report");
    return ProbeDiff{j.at("ours").get<std::string>(), j.at("baseline").get<std::string>(),
                     j.at("sample_set").get<std::string>(), matrix_from_json(j.at("diff"))};
  });
}

// ---------------------------------------------------------------- decisions

std::string decision_json(const BoundaryDecision& d, const std::vector<double>& curve) {
  json scores = json::array();
  for (const auto& [k, s] : d.per_k_scores) scores.push_back({{"k", k}, {"score", s}});
  json j{{"kind", "boundary"},
         {"k_star", d.k_star},
         {"n_layers", d.n_layers},
         {"method", d.method},
         {"metric", d.metric},
         {"m", d.m},
         {"seed", d.seed},
         {"fingerprint", d.fingerprint},
         {"per_k_scores", scores}};
  if (!curve.empty()) j["curve"] = curve;
  return dump(j);
}

std::string decision_tsv(const BoundaryDecision& d) {
  std::string out = "k\tscore\tselected\n";
  for (const auto& [k, s] : d.per_k_scores) {
    out += std::to_string(k) + "\t" + format_number(s) + "\t" + (k == d.k_star ? "1" : "0") + "\n";
  }
  return out;
}

BoundaryDecision parse_decision_json(const std::string& text) {
  const json j = parse_or_throw(text, "boundary decision");
  return read_fields("boundary decision", [&] {
    if (j.at("kind") != "boundary") throw ParseError("not a boundary decision");
    BoundaryDecision d;
    d.k_star = j.at("k_star").get<int>();
    d.n_layers = j.at("n_layers").get<int>();
    d.method = j.at("method").get<std::string>();
    d.metric = j.at("metric").get<std::string>();
    d.m = j.at("m").get<int>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.fingerprint = j.at("fingerprint").get<std::string>();
    for (const auto& e : j.at("per_k_scores")) d.per_k_scores[e.at("k").get<int>()] = e.at("score").get<double>();
    return d;
  });
}

// ---------------------------------------------------------------- eval

std::string eval_json(const EvalRecord& e) {
  const json j{{"kind", "eval"},
               {"task", e.task},
               {"split", e.split},
               {"metric", e.metric},
               {"adapters", e.adapters},
               {"keep_bottom", e.keep_bottom},
               {"score", e.score},
               {"sample_count", e.sample_count},
               {"per_sample", e.per_sample},
               {"predictions", e.predictions}};
  return dump(j);
}

std::string eval_tsv(const EvalRecord& e) {
  std::string out = "index\tscore\tprediction\n";
  for (std::size_t i = 0; i < e.per_sample.size(); ++i) {
    std::string p = i < e.predictions.size() ? e.predictions[i] : "";
    for (char& c : p) {
      if (c == '\t' || c == '\n') c = ' ';
    }
    out += std::to_string(i) + "\t" + format_number(e.per_sample[i]) + "\t" + p + "\n";
  }
  return out;
}

EvalRecord parse_eval_json(const std::string& text) {
  const json j = parse_or_throw(text, "eval report");
  return read_fields("eval report", [&] {
    if (j.at("kind") != "eval") throw ParseError("not an eval report");
    EvalRecord e;
    e.task = j.at("task").get<std::string>();
    e.split = j.at("split").get<std::string>();
    e.metric = j.at("metric").get<std::string>();
    e.adapters = j.at("adapters").get<std::string>();
    e.keep_bottom = j.at("keep_bottom").get<int>();
    e.score = j.at("score").get<double>();
    e.sample_count = j.at("sample_count").get<int>();
    e.per_sample = j.at("per_sample").get<std::vector<double>>();
    e.predictions = j.at("predictions").get<std::vector<std::string>>();
    return e;
  });
}

// ---------------------------------------------------------------- manifest

std::string manifest_json(const Manifest& m) {
  auto hashes = [](const std::map<std::string, std::string>& files) {
    json o = json::object();
    for (const auto& [path, given] : files) o[path] = given.empty() ? sha256_hex(read_file(path)) : given;
    return o;
  };
  json config = m.config_json.empty() ? json(nullptr) : json::parse(m.config_json);
  const json j{{"kind", "manifest"},
               {"command", m.command},
               {"args", m.args},
               {"seed", m.seed},
               {"inputs", hashes(m.inputs)},
               {"outputs", hashes(m.outputs)},
               {"config", config},
               {"versions",
                {{"tool", "lbctl 1.0"},
                 {"checkpoint_format", kCheckpointVersion},
                 {"adapter_format", kAdapterVersion},
                 {"normalization", std::string(kNormalizationVersion)}}}};
  return dump(j);
}

}  // namespace lb
