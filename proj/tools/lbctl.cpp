// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// lbctl: command-line driver for the boundary-layer pipeline.
//   gen-data -> pretrain -> finetune -> probe -> knee | sweep -> export -> eval
// Exit codes: 0 success, 1 usage error, 2 data, compatibility or I/O error.

#include <chrono>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "lb/boundary.hpp"
#include "lb/error.hpp"
#include "lb/io.hpp"
#include "lb/probe.hpp"
#include "lb/report.hpp"
#include "lb/run_config.hpp"
#include "lb/training.hpp"

namespace fs = std::filesystem;
using namespace lb;

namespace {

struct Globals {
  std::string config_path;
  std::int64_t seed = -1;  // -1: take the config's seed
};

RunConfig resolve_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? default_run_config() : parse_run_config(read_file(g.config_path));
  if (g.seed >= 0) c.seed = static_cast<std::uint64_t>(g.seed);
  c.validate();
  return c;
}

class Timer {
 public:
  explicit Timer(std::string what) : what_(std::move(what)), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::fprintf(stderr, "[lbctl] %s: %.1f s\n", what_.c_str(), s);
  }

 private:
  std::string what_;
  std::chrono::steady_clock::time_point start_;
};

std::string sibling(const fs::path& p, const std::string& suffix) {
  fs::path q = p;
  q.replace_extension();
  return q.string() + suffix;
}

void write_manifest(const fs::path& path, const std::string& command, const std::map<std::string, std::string>& args,
                    const RunConfig& cfg, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  Manifest m;
  m.command = command;
  m.args = args;
  m.seed = cfg.seed;
  for (const auto& p : inputs) m.inputs[p] = "";
  for (const auto& p : outputs) m.outputs[p] = "";
  m.config_json = cfg.to_json();
  atomic_write(path, manifest_json(m));
}

std::vector<Sample> take(std::vector<Sample> v, int n) {
  if (n > 0 && static_cast<int>(v.size()) > n) v.resize(static_cast<std::size_t>(n));
  return v;
}

// "K" or "from:decision.json".
int resolve_keep_bottom(const std::string& spec, std::vector<std::string>* inputs) {
  if (spec.rfind("from:", 0) == 0) {
    const std::string path = spec.substr(5);
    inputs->push_back(path);
    return parse_decision_json(read_file(path)).k_star;
  }
  try {
    std::size_t used = 0;
    const int k = std::stoi(spec, &used);
    if (used != spec.size()) throw std::invalid_argument(spec);
    return k;
  } catch (const std::logic_error&) {
    throw ConfigError("--keep-bottom expects an integer or from:<decision.json>, got '" + spec + "'");
  }
}

struct ModelAndSet {
  BaseWeights base;
  std::string fingerprint;
  LoraSet set;
};

ModelAndSet load_model(const std::string& model_path, const std::string& adapters_path) {
  ModelAndSet m;
  m.base = load_checkpoint(model_path);
  m.fingerprint = model_fingerprint(m.base);
  if (!adapters_path.empty()) m.set = load_adapters_for(adapters_path, m.fingerprint);
  return m;
}

std::string describe_set(const LoraSet& set) {
  if (set.empty()) return "none";
  std::string t;
  for (Proj p : set.targets) t += (t.empty() ? "" : ",") + std::string(proj_name(p));
  return "layers 1.." + std::to_string(set.max_layer()) + " targets " + t + " rank " + std::to_string(set.rank);
}

Metric resolve_metric(const std::string& flag, const RunConfig& cfg, Task task) {
  if (!flag.empty()) return parse_metric(flag);
  if (!cfg.sweep.metric.empty()) return parse_metric(cfg.sweep.metric);
  return default_metric(task);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lbctl: LoRA boundary-layer toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "RunConfig JSON file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "global seed (overrides the config)")->check(CLI::NonNegativeNumber);

  std::function<void()> action;

  // ---- gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a task dataset");
  std::string gen_task, gen_domain, gen_out;
  gen->add_option("--task", gen_task, "kvqa, arith, cipher, summary or respsel");
  gen->add_option("--domain", gen_domain, "in, ood-a or ood-b (cipher)");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->callback([&] {
    action = [&] {
      RunConfig cfg = resolve_config(g);
      if (!gen_task.empty()) cfg.task.task = parse_task(gen_task);
      if (!gen_domain.empty()) cfg.task.domain = parse_domain(gen_domain);
      const Dataset ds = generate_dataset(cfg.task, cfg.seed);
      save_dataset(gen_out, ds);
      // Paths are relative to the dataset directory so that two runs with the
      // same seed give identical trees wherever they are written.
      const fs::path dir(gen_out);
      Manifest m;
      m.command = "gen-data";
      m.args = {{"task", gen_task}, {"domain", gen_domain}};
      m.seed = cfg.seed;
      for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "vocab.txt", "dataset.json"}) {
        m.outputs[f] = sha256_hex(read_file(dir / f));
      }
      m.config_json = cfg.to_json();
      atomic_write(dir / "manifest.json", manifest_json(m));
      std::cout << "wrote " << ds.train.size() << "/" << ds.validation.size() << "/" << ds.test.size() << " "
                << task_name(cfg.task.task) << " samples to " << gen_out << "\n";
    };
  });

  // ---- pretrain
  auto* pre = app.add_subcommand("pretrain", "pretrain the base model on the synthetic corpus");
  std::string pre_out, pre_log;
  pre->add_option("--out", pre_out, "checkpoint path (.lbwt)")->required();
  pre->add_option("--log", pre_log, "training-log TSV (default: <out>.log.tsv)");
  pre->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      Timer timer("pretrain");
      const auto corpus = gen_pretrain_corpus(cfg.seed, cfg.pretrain.tokens, cfg.pretrain.seq_len);
      TrainConfig t;
      t.lr = cfg.pretrain.lr;
      t.epochs = cfg.pretrain.epochs;
      t.batch = cfg.pretrain.batch;
      t.seed = cfg.seed;
      t.grad_clip = cfg.train.grad_clip;
      const auto result = pretrain(cfg.model, t, corpus);
      save_checkpoint(pre_out, result.weights);
      const std::string log = pre_log.empty() ? sibling(pre_out, ".log.tsv") : pre_log;
      atomic_write(log, result.log.tsv());
      write_manifest(sibling(pre_out, ".manifest.json"), "pretrain", {{"out", pre_out}, {"log", log}}, cfg, {},
                     {pre_out, log});
      std::cout << "final_loss\t" << format_number(result.final_loss) << "\n";
      std::cout << "fingerprint\t" << model_fingerprint(result.weights) << "\n";
    };
  });

  // ---- finetune / finetune-partial
  std::string ft_model, ft_data, ft_out, ft_log;
  int ft_k = 0;
  auto add_ft_flags = [&](CLI::App* c) {
    c->add_option("--model", ft_model, "base checkpoint")->required()->check(CLI::ExistingFile);
    c->add_option("--data", ft_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--out", ft_out, "adapter file (.lbad)")->required();
    c->add_option("--log", ft_log, "training-log TSV (default: <out>.log.tsv)");
  };
  auto run_finetune = [&](bool partial) {
    const RunConfig cfg = resolve_config(g);
    Timer timer(partial ? "finetune-partial" : "finetune");
    const auto m = load_model(ft_model, "");
    const auto train = load_split(ft_data, "train");
    const TrainConfig t = cfg.train_config();
    FinetuneResult r;
    if (partial) {
      r = finetune_partial(m.base, m.fingerprint, train, t, ft_k, cfg.lora.targets, cfg.lora.rank, cfg.lora.alpha,
                           cfg.seed);
    } else {
      LoraSet set = init_adapters(m.base.config, cfg.lora.targets, cfg.lora.rank, cfg.lora.alpha, cfg.seed);
      r = finetune_lora(m.base, m.fingerprint, std::move(set), train, t);
    }
    save_adapters(ft_out, r.set);
    const std::string log = ft_log.empty() ? sibling(ft_out, ".log.tsv") : ft_log;
    atomic_write(log, r.log.tsv());
    std::map<std::string, std::string> args{{"model", ft_model}, {"data", ft_data}, {"out", ft_out}, {"log", log}};
    if (partial) args["k"] = std::to_string(ft_k);
    write_manifest(sibling(ft_out, ".manifest.json"), partial ? "finetune-partial" : "finetune", args, cfg,
                   {ft_model, (fs::path(ft_data) / "train.jsonl").string()}, {ft_out, log});
    std::cout << "adapters\t" << r.set.size() << "\nfinal_loss\t" << format_number(r.log.final_loss()) << "\n";
  };
  auto* ft = app.add_subcommand("finetune", "train LoRA adapters on every layer (base frozen)");
  add_ft_flags(ft);
  ft->callback([&] { action = [&] { run_finetune(false); }; });
  auto* ftp = app.add_subcommand("finetune-partial", "train LoRA adapters on layers 1..K only");
  add_ft_flags(ftp);
  ftp->add_option("--k", ft_k, "top layer that gets adapters")->required();
  ftp->callback([&] { action = [&] { run_finetune(true); }; });

  // ---- probe
  auto* pr = app.add_subcommand("probe", "layer-wise ground-truth and max probability curves");
  std::string pr_model, pr_adapters, pr_data, pr_split = "validation", pr_out, pr_keep;
  int pr_n = 0, pr_tokens = 0;
  std::vector<int> pr_drop;
  pr->add_option("--model", pr_model, "base checkpoint")->required()->check(CLI::ExistingFile);
  pr->add_option("--adapters", pr_adapters, "adapter file (omit for the bare base model)");
  pr->add_option("--data", pr_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  pr->add_option("--split", pr_split, "train, validation or test");
  pr->add_option("--n", pr_n, "number of samples (default: probe.samples)");
  pr->add_option("--tokens", pr_tokens, "reference tokens per sample (default: probe.n_tokens)");
  pr->add_option("--keep-bottom", pr_keep, "keep adapters on layers 1..K (K or from:decision.json)");
  pr->add_option("--drop-ks", pr_drop, "also emit one report per K with adapters above K dropped")->delimiter(',');
  pr->add_option("--out", pr_out, "report path (.json; a .tsv is written next to it)")->required();
  pr->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      Timer timer("probe");
      std::vector<std::string> inputs{pr_model, (fs::path(pr_data) / (pr_split + ".jsonl")).string()};
      if (!pr_adapters.empty()) inputs.push_back(pr_adapters);
      auto m = load_model(pr_model, pr_adapters);
      if (!pr_keep.empty()) m.set = drop_above(m.set, resolve_keep_bottom(pr_keep, &inputs));
      const auto samples = take(load_split(pr_data, pr_split), pr_n > 0 ? pr_n : cfg.probe.samples);
      const int tokens = pr_tokens > 0 ? pr_tokens : cfg.probe.n_tokens;
      const LayerMask all = mask_all(m.base.config.n_layers, true);
      std::vector<std::pair<std::string, ProbeReport>> reports;
      reports.emplace_back(pr_out, probe_ground_truth(m.base, m.set, all, samples, tokens));
      const auto dropped = probe_under_drop(m.base, m.set, pr_drop, samples, tokens);
      for (std::size_t i = 0; i < dropped.size(); ++i) {
        reports.emplace_back(sibling(pr_out, "_k" + std::to_string(pr_drop[i]) + ".json"), dropped[i]);
      }
      std::vector<std::string> outs;
      for (const auto& [path, r] : reports) {
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        atomic_write(path, probe_json(r));
        atomic_write(sibling(path, ".tsv"), probe_tsv(r));
        outs.push_back(path);
        outs.push_back(sibling(path, ".tsv"));
      }
      write_manifest(sibling(pr_out, ".manifest.json"), "probe",
                     {{"model", pr_model}, {"adapters", pr_adapters}, {"split", pr_split}, {"out", pr_out}}, cfg,
                     inputs, outs);
      const auto curve = gt_layer_curve(reports.front().second);
      std::cout << "layer\tgt_mean\n";
      for (std::size_t l = 0; l < curve.size(); ++l) std::cout << l + 1 << "\t" << format_number(curve[l]) << "\n";
    };
  });

  // ---- diff-probe
  auto* dp = app.add_subcommand("diff-probe", "signed difference of two probe reports' ground-truth curves");
  std::string dp_ours, dp_base, dp_out;
  dp->add_option("--ours", dp_ours, "probe report")->required()->check(CLI::ExistingFile);
  dp->add_option("--baseline", dp_base, "probe report")->required()->check(CLI::ExistingFile);
  dp->add_option("--out", dp_out, "difference report (.json + .tsv)")->required();
  dp->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      const auto d = make_probe_diff(parse_probe_json(read_file(dp_ours)), parse_probe_json(read_file(dp_base)));
      atomic_write(dp_out, diff_json(d));
      atomic_write(sibling(dp_out, ".tsv"), diff_tsv(d));
      write_manifest(sibling(dp_out, ".manifest.json"), "diff-probe", {{"ours", dp_ours}, {"baseline", dp_base}}, cfg,
                     {dp_ours, dp_base}, {dp_out, sibling(dp_out, ".tsv")});
      std::cout << diff_tsv(d);
    };
  });

  // ---- knee
  auto* kn = app.add_subcommand("knee", "boundary layer from the knee of a probe report's ground-truth curve");
  std::string kn_probe, kn_out;
  double kn_ratio = kDefaultMinJumpRatio;
  bool kn_fallback = false;
  kn->add_option("--probe", kn_probe, "probe report")->required()->check(CLI::ExistingFile);
  kn->add_option("--min-jump-ratio", kn_ratio, "smallest accepted rise relative to the curve range");
  kn->add_flag("--fallback-default", kn_fallback, "use round(L*15/32) when no knee is found");
  kn->add_option("--out", kn_out, "decision (.json + .tsv)")->required();
  kn->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      const ProbeReport r = parse_probe_json(read_file(kn_probe));
      const auto curve = gt_layer_curve(r);
      BoundaryDecision d;
      d.n_layers = r.n_layers;
      d.metric = "gt-probability";
      d.m = r.sample_count;
      d.seed = cfg.seed;
      const auto at = r.config.find("model=");
      if (at != std::string::npos) d.fingerprint = r.config.substr(at + 6, 64);
      try {
        d.k_star = detect_knee(curve, kn_ratio);
        d.method = "knee";
      } catch (const NoKneeError& e) {
        if (!kn_fallback) throw;
        std::cerr << "warning: " << e.what() << "; using the default boundary\n";
        d.k_star = default_boundary(r.n_layers);
        d.method = "default";
      }
      atomic_write(kn_out, decision_json(d, curve));
      atomic_write(sibling(kn_out, ".tsv"), decision_tsv(d));
      write_manifest(sibling(kn_out, ".manifest.json"), "knee", {{"probe", kn_probe}}, cfg, {kn_probe},
                     {kn_out, sibling(kn_out, ".tsv")});
      std::cout << "k_star\t" << d.k_star << "\nmethod\t" << d.method << "\n";
    };
  });

  // ---- sweep
  auto* sw = app.add_subcommand("sweep", "pick the boundary layer by decoding validation samples at every K");
  std::string sw_model, sw_adapters, sw_data, sw_metric, sw_out;
  int sw_m = 0, sw_budget = 0;
  std::vector<int> sw_ks;
  bool sw_coarse = false;
  sw->add_option("--model", sw_model, "base checkpoint")->required()->check(CLI::ExistingFile);
  sw->add_option("--adapters", sw_adapters, "fully fine-tuned adapter file")->required()->check(CLI::ExistingFile);
  sw->add_option("--data", sw_data, "dataset directory (reads the validation split only)")
      ->required()
      ->check(CLI::ExistingDirectory);
  sw->add_option("--metric", sw_metric, "em, em-strict, em-final, f1, rouge-l, bleu or accuracy");
  sw->add_option("--m", sw_m, "validation samples (default: sweep.m)");
  sw->add_option("--ks", sw_ks, "candidate K values (default: 0..L)")->delimiter(',');
  sw->add_option("--budget", sw_budget, "max new tokens per sample (default: sweep.decode_budget)");
  sw->add_flag("--coarse-to-fine", sw_coarse, "every other K first, then the neighbours of the best");
  sw->add_option("--out", sw_out, "decision (.json + .tsv)")->required();
  sw->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      Timer timer("sweep");
      const auto m = load_model(sw_model, sw_adapters);
      const auto val = take(load_split(sw_data, "validation"), sw_m > 0 ? sw_m : cfg.sweep.m);
      if (val.empty()) throw InputError("sweep: validation split is empty");
      SweepOptions opts;
      opts.ks = sw_ks.empty() ? cfg.sweep.ks : sw_ks;
      opts.decode_budget = sw_budget > 0 ? sw_budget : cfg.sweep.decode_budget;
      opts.coarse_to_fine = sw_coarse || cfg.sweep.coarse_to_fine;
      opts.seed = cfg.seed;
      const Metric metric = resolve_metric(sw_metric, cfg, val.front().task);
      const auto d = sweep_boundary(m.base, m.fingerprint, m.set, val, metric, opts, default_vocab());
      atomic_write(sw_out, decision_json(d));
      atomic_write(sibling(sw_out, ".tsv"), decision_tsv(d));
      write_manifest(sibling(sw_out, ".manifest.json"), "sweep",
                     {{"model", sw_model}, {"adapters", sw_adapters}, {"metric", std::string(metric_name(metric))},
                      {"m", std::to_string(val.size())}},
                     cfg, {sw_model, sw_adapters, (fs::path(sw_data) / "validation.jsonl").string()},
                     {sw_out, sibling(sw_out, ".tsv")});
      std::cout << decision_tsv(d);
    };
  });

  // ---- export
  auto* ex = app.add_subcommand("export", "write the adapter set with layers above K removed");
  std::string ex_adapters, ex_keep, ex_out, ex_model;
  ex->add_option("--adapters", ex_adapters, "adapter file")->required()->check(CLI::ExistingFile);
  ex->add_option("--keep-bottom", ex_keep, "K or from:decision.json")->required();
  ex->add_option("--model", ex_model, "base checkpoint to check the fingerprint against")->check(CLI::ExistingFile);
  ex->add_option("--out", ex_out, "adapter file to write")->required();
  ex->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      if (fs::exists(ex_out) && fs::equivalent(ex_out, ex_adapters)) {
        throw ConfigError("export: --out must differ from --adapters (inputs are never modified)");
      }
      std::vector<std::string> inputs{ex_adapters};
      const LoraSet set = ex_model.empty() ? load_adapters(ex_adapters)
                                           : load_adapters_for(ex_adapters, load_model(ex_model, "").fingerprint);
      if (!ex_model.empty()) inputs.push_back(ex_model);
      LoraSet out;
      if (ex_keep.rfind("from:", 0) == 0) {
        inputs.push_back(ex_keep.substr(5));
        out = apply_boundary(set, parse_decision_json(read_file(ex_keep.substr(5))));
      } else {
        BoundaryDecision d;
        d.k_star = resolve_keep_bottom(ex_keep, &inputs);
        out = apply_boundary(set, d);
      }
      save_adapters(ex_out, out);
      write_manifest(sibling(ex_out, ".manifest.json"), "export", {{"adapters", ex_adapters}, {"keep_bottom", ex_keep}},
                     cfg, inputs, {ex_out});
      std::cout << "adapters\t" << out.size() << "\n";
    };
  });

  // ---- eval
  auto* ev = app.add_subcommand("eval", "decode a split and score it");
  std::string ev_model, ev_adapters, ev_data, ev_split = "test", ev_metric, ev_keep, ev_out;
  int ev_n = 0, ev_budget = 0;
  ev->add_option("--model", ev_model, "base checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--adapters", ev_adapters, "adapter file (omit for the bare base model)");
  ev->add_option("--data", ev_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--split", ev_split, "train, validation or test");
  ev->add_option("--metric", ev_metric, "metric (default: the task's)");
  ev->add_option("--keep-bottom", ev_keep, "keep adapters on layers 1..K (K or from:decision.json)");
  ev->add_option("--n", ev_n, "score only the first n samples");
  ev->add_option("--budget", ev_budget, "max new tokens per sample (default: sweep.decode_budget)");
  ev->add_option("--out", ev_out, "eval report (.json + .tsv)")->required();
  ev->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      Timer timer("eval");
      std::vector<std::string> inputs{ev_model, (fs::path(ev_data) / (ev_split + ".jsonl")).string()};
      if (!ev_adapters.empty()) inputs.push_back(ev_adapters);
      auto m = load_model(ev_model, ev_adapters);
      EvalRecord rec;
      if (!ev_keep.empty()) {
        rec.keep_bottom = resolve_keep_bottom(ev_keep, &inputs);
        m.set = drop_above(m.set, rec.keep_bottom);
      }
      const auto samples = take(load_split(ev_data, ev_split), ev_n);
      if (samples.empty()) throw InputError("eval: split is empty");
      const Metric metric = ev_metric.empty() ? default_metric(samples.front().task) : parse_metric(ev_metric);
      if (!metric_compatible(metric, samples.front().task)) {
        throw ConfigError("metric " + std::string(metric_name(metric)) + " does not apply to task " +
                          std::string(task_name(samples.front().task)));
      }
      const int budget = ev_budget > 0 ? ev_budget : cfg.sweep.decode_budget;
      rec.predictions = decode_predictions(m.base, m.set, mask_all(m.base.config.n_layers, true), samples, budget,
                                           default_vocab());
      const EvalReport r = score_predictions(metric, rec.predictions, samples);
      rec.task = std::string(task_name(samples.front().task));
      rec.split = ev_split;
      rec.metric = std::string(metric_name(metric));
      rec.adapters = describe_set(m.set);
      rec.score = r.score;
      rec.sample_count = r.sample_count;
      rec.per_sample = r.per_sample;
      atomic_write(ev_out, eval_json(rec));
      atomic_write(sibling(ev_out, ".tsv"), eval_tsv(rec));
      write_manifest(sibling(ev_out, ".manifest.json"), "eval",
                     {{"split", ev_split}, {"metric", rec.metric}, {"keep_bottom", ev_keep}}, cfg, inputs,
                     {ev_out, sibling(ev_out, ".tsv")});
      std::cout << rec.metric << "\t" << format_number(100.0 * rec.score) << "\n";
    };
  });

  // ---- report
  auto* rp = app.add_subcommand("report", "re-emit saved artifacts as JSON + TSV and tabulate eval scores");
  std::vector<std::string> rp_in;
  std::string rp_dir;
  rp->add_option("--in", rp_in, "probe, difference, boundary or eval JSON artifacts")
      ->required()
      ->check(CLI::ExistingFile);
  rp->add_option("--out-dir", rp_dir, "output directory")->required();
  rp->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(g);
      std::string summary = "artifact\ttask\tsplit\tmetric\tkeep_bottom\tadapters\tscore\n";
      std::vector<std::string> outs;
      for (const auto& in : rp_in) {
        const std::string text = read_file(in);
        const std::string stem = fs::path(in).stem().string();
        const fs::path json_out = fs::path(rp_dir) / (stem + ".json");
        const fs::path tsv_out = fs::path(rp_dir) / (stem + ".tsv");
        std::string j, t;
        if (text.find("\"kind\": \"probe\"") != std::string::npos) {
          const auto r = parse_probe_json(text);
          j = probe_json(r);
          t = probe_tsv(r);
        } else if (text.find("\"kind\": \"probe-difference\"") != std::string::npos) {
          const auto d = parse_diff_json(text);
          j = diff_json(d);
          t = diff_tsv(d);
        } else if (text.find("\"kind\": \"boundary\"") != std::string::npos) {
          const auto d = parse_decision_json(text);
          j = text;  // keeps the optional knee curve verbatim
          parse_decision_json(j);
          t = decision_tsv(d);
        } else if (text.find("\"kind\": \"eval\"") != std::string::npos) {
          const auto e = parse_eval_json(text);
          j = eval_json(e);
          t = eval_tsv(e);
          summary += stem + "\t" + e.task + "\t" + e.split + "\t" + e.metric + "\t" + std::to_string(e.keep_bottom) +
                     "\t" + e.adapters + "\t" + format_number(100.0 * e.score) + "\n";
        } else {
          throw ParseError(in + ": not a recognised artifact");
        }
        atomic_write(json_out, j);
        atomic_write(tsv_out, t);
        outs.push_back(json_out.string());
        outs.push_back(tsv_out.string());
      }
      const fs::path summary_path = fs::path(rp_dir) / "summary.tsv";
      atomic_write(summary_path, summary);
      outs.push_back(summary_path.string());
      write_manifest(fs::path(rp_dir) / "manifest.json", "report", {{"out_dir", rp_dir}}, cfg, rp_in, outs);
      std::cout << summary;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return 1;
  }
  try {
    action();
  } catch (const Error& e) {
    std::cerr << "lbctl: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lbctl: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
