/*
 * Copyright 2026 The sleepx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// The `sleepx` command line. run() is the whole program; main() only
// forwards argv so the tests can drive it in-process.
//
// Exit codes: 0 success, 1 usage error, 2 data error (unreadable or invalid
// input files), 3 runtime error. Relative data paths resolve against
// $SLEEPX_DATA_DIR when it is set. Flags override values from --config, which
// override the built-in defaults; the resolved values are logged to stderr
// before any work starts.

#ifndef SLEEPX_CLI_HPP_
#define SLEEPX_CLI_HPP_

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sleepx/checkpoint.hpp"
#include "sleepx/dataio.hpp"
#include "sleepx/error.hpp"
#include "sleepx/explain.hpp"
#include "sleepx/plots.hpp"
#include "sleepx/service.hpp"
#include "sleepx/training.hpp"

namespace sleepx::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kDataDirEnv = "SLEEPX_DATA_DIR";

inline std::string data_path(const std::string& path) {
  const char* dir = std::getenv(kDataDirEnv);
  if (!dir || !*dir || path.empty() || path == "-" || std::filesystem::path(path).is_absolute()) {
    return path;
  }
  return (std::filesystem::path(dir) / path).string();
}

// Writes `content` to `path`, or to `out` when the path is empty or "-".
inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"mean_loss", m.mean_loss},
          {"total", m.total()},
          {"correct", m.correct()},
          {"confusion", m.confusion}};
}

inline const PatientSequence& find_subject(const std::vector<PatientSequence>& data,
                                           const std::string& id) {
  for (const auto& s : data) {
    if (s.subject_id == id) return s;
  }
  throw ContractError("subject '" + id + "' is not in the data file");
}

inline std::vector<PatientSequence> read_data(const std::string& path) {
  return parse_csv(data_path(path));
}

// ---------------------------------------------------------------------------
// Subcommand options

struct SynthArgs {
  std::size_t subjects = 422;
  std::size_t timesteps = 7;
  std::uint64_t seed = 7;
  SynthOptions options;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string arch = "lstm";
  std::uint64_t seed = 7;
  std::size_t train_size = 400;
  std::size_t test_size = 22;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::size_t hidden = 32;
  std::size_t tcn_channels = 16;
  std::size_t tcn_kernel = 3;
  std::size_t tcn_levels = 3;
  std::size_t patience = 20;
  double jitter = 0.05;
  std::string oversample = "factor";
  double oversample_factor = 2.0;
  double validation_fraction = 0.1;
  std::size_t parallel = 1;
  std::string out = "checkpoint.json";
  std::string history;  // default: <out>.history.csv
};

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string subset = "all";  // or "test": the held-out part of the train split
  std::uint64_t seed = 7;
  std::size_t train_size = 400;
  std::size_t test_size = 22;
  std::string out;
  std::string scatter;  // plot prefix
};

struct PredictArgs {
  std::string checkpoint;
  std::string data;
  std::vector<std::string> subjects;  // empty: every subject
  std::string out;
};

struct ShapArgs {
  std::string checkpoint;
  std::string data;
  std::string subject;
  std::string background;  // default: --data
  std::string method = "kernel";
  std::string granularity = "feature";
  std::string target = "disorder";
  std::size_t samples = 2048;
  std::uint64_t seed = 7;
  std::size_t background_size = 50;
  std::string out;
  std::string plot;
};

struct CounterfactualArgs {
  std::string checkpoint;
  std::string data;
  std::string subject;
  std::string target = "None";
  std::vector<std::string> mutable_features;  // empty: every mutable input
  std::vector<std::string> weights;           // name=value
  std::string scope = "final_step";
  CounterfactualConfig config;
  std::size_t timeout_ms = 0;  // 0: no limit
  std::string out;
  std::string plot;
};

struct ServeArgs {
  std::string checkpoint;
  std::string background;
  ServiceConfig config;
  std::size_t timeout_ms = 30000;
};

// ---------------------------------------------------------------------------
// Subcommands

inline int run_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  if (a.out.empty()) throw ContractError("synth: --out is required");
  const auto data = synth_generate(a.subjects, a.timesteps, a.seed, a.options);
  std::ostringstream csv;
  write_csv(csv, data);
  emit(data_path(a.out), csv.str(), out);
  err << "synth: wrote " << data.size() << " subjects x " << a.timesteps << " steps\n";
  return kExitOk;
}

inline int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto data = read_data(a.data);
  const DatasetSplit split = split_dataset(data, a.train_size, a.test_size, a.seed);
  TrainConfig cfg;
  cfg.arch = parse_arch(a.arch);
  cfg.seed = a.seed;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.optimizer.kind = a.optimizer == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  cfg.optimizer.learning_rate = a.learning_rate;
  cfg.optimizer.weight_decay = a.weight_decay;
  cfg.hyper.hidden_size = a.hidden;
  cfg.hyper.tcn_channels = a.tcn_channels;
  cfg.hyper.tcn_kernel = a.tcn_kernel;
  cfg.hyper.tcn_levels = a.tcn_levels;
  cfg.early_stop_patience = a.patience;
  cfg.augmentation.jitter_sigma = a.jitter;
  cfg.augmentation.oversample = a.oversample == "none"      ? Oversample::kNone
                                : a.oversample == "balance" ? Oversample::kBalance
                                                            : Oversample::kFactor;
  cfg.augmentation.oversample_factor = a.oversample_factor;
  cfg.validation_fraction = a.validation_fraction;
  cfg.threads = a.parallel;
  const TrainResult result = train(split, cfg, [&](const EpochRecord& r) {
    if (r.epoch % 25 == 0) {
      err << "epoch " << r.epoch << " train loss " << format_number(r.train.mean_loss)
          << " validation loss " << format_number(r.validation.mean_loss) << '\n';
    }
  });
  save_checkpoint(result.checkpoint, a.out);
  std::ostringstream history;
  write_history_csv(history, result.history);
  emit(a.history.empty() ? a.out + ".history.csv" : a.history, history.str(), out);
  nlohmann::json summary = {{"kind", "train_summary"},
                            {"arch", arch_name(cfg.arch)},
                            {"seed", cfg.seed},
                            {"epochs_run", result.history.size()},
                            {"best_epoch", result.best_epoch},
                            {"train_size", result.train_size},
                            {"validation_size", result.validation_size},
                            {"model_hash", checkpoint_hash(result.checkpoint)}};
  if (result.test) summary["test"] = metrics_to_json(*result.test);
  out << summary.dump(2) << '\n';
  return kExitOk;
}

inline int run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream&) {
  const ModelCheckpoint ckpt = load_checkpoint(a.checkpoint);
  auto data = read_data(a.data);
  if (a.subset == "test") data = split_dataset(data, a.train_size, a.test_size, a.seed).test;
  if (data.empty()) throw SizeError("evaluate: no subjects to evaluate");
  nlohmann::json doc = {{"kind", "evaluation"},
                        {"subset", a.subset},
                        {"metrics", metrics_to_json(evaluate(ckpt, data))},
                        {"model_hash", checkpoint_hash(ckpt)}};
  emit(a.out, doc.dump(2) + "\n", out);
  if (!a.scatter.empty()) {
    const auto records = prediction_scatter(ckpt, data);
    std::ostringstream csv;
    write_scatter_csv(csv, records);
    emit(a.scatter + ".csv", csv.str(), out);
    emit(a.scatter + ".svg", scatter_svg(records), out);
  }
  return kExitOk;
}

inline int run_predict(const PredictArgs& a, std::ostream& out, std::ostream&) {
  const ModelCheckpoint ckpt = load_checkpoint(a.checkpoint);
  const auto data = read_data(a.data);
  std::vector<const PatientSequence*> chosen;
  if (a.subjects.empty()) {
    for (const auto& s : data) chosen.push_back(&s);
  } else {
    for (const auto& id : a.subjects) chosen.push_back(&find_subject(data, id));
  }
  nlohmann::json preds = nlohmann::json::array();
  for (const auto* s : chosen) {
    preds.push_back({{"subject_id", s->subject_id}, {"prediction", predict_to_json(ckpt, *s)}});
  }
  const nlohmann::json doc = {{"kind", "predictions"},
                              {"model_hash", checkpoint_hash(ckpt)},
                              {"predictions", std::move(preds)}};
  emit(a.out, doc.dump(2) + "\n", out);
  return kExitOk;
}

inline int run_shap(const ShapArgs& a, std::ostream& out, std::ostream&) {
  const ModelCheckpoint ckpt = load_checkpoint(a.checkpoint);
  const auto data = read_data(a.data);
  const PatientSequence& inst = find_subject(data, a.subject);
  const auto background = a.background.empty() ? data : read_data(a.background);
  ShapOptions opt;
  opt.target_class = parse_target(a.target);
  opt.n_samples = a.samples;
  opt.seed = a.seed;
  opt.background_size = a.background_size;
  ShapReport rep;
  if (a.granularity == "timestep") {
    if (a.method == "exact") {
      detail::require_exact_budget(inst.length() * feature_blocks(ckpt.encoder()).size());
    }
    rep = shap_timestep_summary(ckpt, inst, background, opt);
  } else if (a.method == "exact") {
    rep = shap_exact(ckpt, inst, background, opt);
  } else {
    rep = shap_kernel(ckpt, inst, background, opt);
  }
  nlohmann::json doc = shap_to_json(rep);
  doc["subject_id"] = inst.subject_id;
  doc["model_hash"] = checkpoint_hash(ckpt);
  emit(a.out, doc.dump(2) + "\n", out);
  if (!a.plot.empty()) {
    std::ostringstream csv;
    write_shap_csv(csv, rep);
    emit(a.plot + ".csv", csv.str(), out);
    emit(a.plot + ".svg", shap_svg(rep), out);
  }
  return kExitOk;
}

inline int run_counterfactual(const CounterfactualArgs& a, std::ostream& out, std::ostream&) {
  const ModelCheckpoint ckpt = load_checkpoint(a.checkpoint);
  const auto data = read_data(a.data);
  const PatientSequence& inst = find_subject(data, a.subject);
  const std::size_t target = parse_target(a.target);
  if (target >= kNumClasses) throw ContractError("counterfactual: --target must name a class");
  CounterfactualConfig cfg = a.config;
  cfg.scope = parse_scope(a.scope);
  if (!a.mutable_features.empty()) cfg.mutable_features = a.mutable_features;
  for (const auto& w : a.weights) {
    const auto eq = w.find('=');
    const auto value = eq == std::string::npos ? std::nullopt : parse_number(w.substr(eq + 1));
    if (!value) throw ContractError("counterfactual: --weight expects name=value, got '" + w + "'");
    cfg.feature_weights[w.substr(0, eq)] = *value;
  }
  if (a.timeout_ms > 0) {
    cfg.deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(a.timeout_ms);
  }
  const Counterfactual cf = counterfactual_search(ckpt, inst, target, cfg);
  nlohmann::json doc = counterfactual_to_json(cf);
  doc["subject_id"] = inst.subject_id;
  doc["model_hash"] = checkpoint_hash(ckpt);
  emit(a.out, doc.dump(2) + "\n", out);
  if (!a.plot.empty()) {
    const CounterfactualTrace tr = counterfactual_trace(ckpt, cf);
    std::ostringstream csv;
    write_trace_csv(csv, tr);
    emit(a.plot + ".csv", csv.str(), out);
    emit(a.plot + ".svg", trace_svg(tr, cf), out);
  }
  return kExitOk;
}

inline int run_serve(const ServeArgs& a, std::ostream&, std::ostream& err) {
  ModelCheckpoint ckpt = load_checkpoint(a.checkpoint);
  std::vector<PatientSequence> background;
  if (!a.background.empty()) background = read_data(a.background);
  ServiceConfig cfg = a.config;
  cfg.request_timeout = std::chrono::milliseconds(a.timeout_ms);
  Service service(make_session(std::move(ckpt), std::move(background)), cfg);
  const int port = service.bind();
  err << "serve: listening on " << cfg.host << ':' << port << std::endl;
  return service.listen() ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Explainable sleep-disorder classification: data, training, explanations, service",
               "sleepx"};
  app.set_config("--config", "", "TOML or INI file with option defaults (flags take precedence)");
  app.set_version_flag("--version", "sleepx 0.1.0");
  app.require_subcommand(1);
  app.footer(std::string("Exit codes: 0 ok, 1 usage, 2 data, 3 runtime. ") + kDataDirEnv +
             " sets the directory for relative data paths.");

  const std::vector<std::string> arch_names = {"lstm", "tcn", "tft"};
  const std::vector<std::string> target_names = {"disorder", "None", "Insomnia", "Sleep Apnea"};

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic cohort CSV");
  s->add_option("--subjects", synth.subjects, "Number of subjects")->capture_default_str();
  s->add_option("--timesteps", synth.timesteps, "Days per subject")->capture_default_str()
      ->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  s->add_option("--label-noise", synth.options.label_noise, "Label flip probability")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s->add_option("--strained-fraction", synth.options.strained_fraction,
                "Share of high-strain subjects")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s->add_option("--recovery-probability", synth.options.recovery_probability,
                "Chance a strained subject's final day is rested")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s->add_option("--out", synth.out, "Output CSV path")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a classifier and write a checkpoint");
  t->add_option("--data", tr.data, "Input CSV")->required();
  t->add_option("--arch", tr.arch, "Architecture")->capture_default_str()
      ->check(CLI::IsMember(arch_names));
  t->add_option("--seed", tr.seed, "Seed for split, initialization and batching")->capture_default_str();
  t->add_option("--train-size", tr.train_size, "Training subjects")->capture_default_str();
  t->add_option("--test-size", tr.test_size, "Held-out test subjects")->capture_default_str();
  t->add_option("--epochs", tr.epochs, "Maximum epochs")->capture_default_str();
  t->add_option("--batch-size", tr.batch_size, "Minibatch size")->capture_default_str();
  t->add_option("--optimizer", tr.optimizer, "adam or sgd")->capture_default_str()
      ->check(CLI::IsMember({"adam", "sgd"}));
  t->add_option("--learning-rate", tr.learning_rate, "Step size")->capture_default_str();
  t->add_option("--weight-decay", tr.weight_decay, "Decoupled weight decay")->capture_default_str();
  t->add_option("--hidden", tr.hidden, "Hidden width")->capture_default_str();
  t->add_option("--tcn-channels", tr.tcn_channels, "TCN channels")->capture_default_str();
  t->add_option("--tcn-kernel", tr.tcn_kernel, "TCN kernel width")->capture_default_str();
  t->add_option("--tcn-levels", tr.tcn_levels, "TCN residual blocks")->capture_default_str();
  t->add_option("--patience", tr.patience, "Early-stopping patience (epochs)")->capture_default_str();
  t->add_option("--jitter", tr.jitter, "Augmentation noise, standardized units")->capture_default_str();
  t->add_option("--oversample", tr.oversample, "none, factor or balance")->capture_default_str()
      ->check(CLI::IsMember({"none", "factor", "balance"}));
  t->add_option("--oversample-factor", tr.oversample_factor, "Minority growth factor")
      ->capture_default_str();
  t->add_option("--validation-fraction", tr.validation_fraction,
                "Share of training subjects held out for early stopping")->capture_default_str();
  t->add_option("--parallel", tr.parallel,
                "Gradient shards per batch; above 1 results are not bit-reproducible")
      ->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--out", tr.out, "Checkpoint path")->capture_default_str();
  t->add_option("--history", tr.history, "History CSV path (default <out>.history.csv)");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on labelled subjects");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  e->add_option("--data", ev.data, "Input CSV")->required();
  e->add_option("--subset", ev.subset, "all, or test: the held-out part of the train split")
      ->capture_default_str()->check(CLI::IsMember({"all", "test"}));
  e->add_option("--seed", ev.seed, "Split seed for --subset test")->capture_default_str();
  e->add_option("--train-size", ev.train_size, "Split size for --subset test")->capture_default_str();
  e->add_option("--test-size", ev.test_size, "Split size for --subset test")->capture_default_str();
  e->add_option("--out", ev.out, "Metrics JSON path (default stdout)");
  e->add_option("--scatter", ev.scatter, "Write <prefix>.csv and <prefix>.svg prediction scatter");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Class probabilities and attention per subject");
  p->add_option("--checkpoint", pr.checkpoint, "Checkpoint path")->required();
  p->add_option("--data", pr.data, "Input CSV")->required();
  p->add_option("--subject", pr.subjects, "Subject id (repeatable; default all)");
  p->add_option("--out", pr.out, "Output JSON path (default stdout)");

  ShapArgs sh;
  auto* h = app.add_subcommand("shap", "Shapley attributions for one subject");
  h->add_option("--checkpoint", sh.checkpoint, "Checkpoint path")->required();
  h->add_option("--data", sh.data, "Input CSV holding the subject")->required();
  h->add_option("--subject", sh.subject, "Subject id")->required();
  h->add_option("--background", sh.background, "Background CSV (default --data)");
  h->add_option("--method", sh.method, "kernel or exact")->capture_default_str()
      ->check(CLI::IsMember({"kernel", "exact"}));
  h->add_option("--granularity", sh.granularity, "feature or timestep")->capture_default_str()
      ->check(CLI::IsMember({"feature", "timestep"}));
  h->add_option("--target", sh.target, "Explained output")->capture_default_str()
      ->check(CLI::IsMember(target_names));
  h->add_option("--samples", sh.samples, "Kernel coalition samples")->capture_default_str();
  h->add_option("--seed", sh.seed, "Sampling and background seed")->capture_default_str();
  h->add_option("--background-size", sh.background_size, "Background subjects drawn")
      ->capture_default_str()->check(CLI::PositiveNumber);
  h->add_option("--out", sh.out, "Report JSON path (default stdout)");
  h->add_option("--plot", sh.plot, "Write <prefix>.csv and <prefix>.svg");

  CounterfactualArgs cf;
  auto* c = app.add_subcommand("counterfactual", "Smallest change that flips the prediction");
  c->add_option("--checkpoint", cf.checkpoint, "Checkpoint path")->required();
  c->add_option("--data", cf.data, "Input CSV holding the subject")->required();
  c->add_option("--subject", cf.subject, "Subject id")->required();
  c->add_option("--target", cf.target, "Target class")->capture_default_str()
      ->check(CLI::IsMember({"None", "Insomnia", "Sleep Apnea"}));
  c->add_option("--mutable", cf.mutable_features, "Features allowed to change (comma list)")
      ->delimiter(',');
  c->add_option("--weight", cf.weights, "Distance weight override name=value (repeatable)");
  c->add_option("--scope", cf.scope, "final_step, every_step or sustained_shift")
      ->capture_default_str()->check(CLI::IsMember({"final_step", "every_step", "sustained_shift"}));
  c->add_option("--max-iters", cf.config.max_iters, "Gradient iterations per category combination")
      ->capture_default_str();
  c->add_option("--lambda-initial", cf.config.lambda_initial, "Initial prediction-loss weight")
      ->capture_default_str();
  c->add_option("--lambda-growth", cf.config.lambda_growth, "Weight multiplier")->capture_default_str();
  c->add_option("--lambda-interval", cf.config.lambda_interval, "Iterations between growth steps")
      ->capture_default_str();
  c->add_option("--lambda-cap", cf.config.lambda_cap, "Weight ceiling")->capture_default_str();
  c->add_option("--step-size", cf.config.step_size, "Gradient step, standardized units")
      ->capture_default_str();
  c->add_option("--max-move", cf.config.max_move, "Per-iteration move bound")->capture_default_str();
  c->add_option("--grid-limit", cf.config.grid_fallback_limit, "Largest exhaustive integer grid")
      ->capture_default_str();
  c->add_option("--timeout-ms", cf.timeout_ms, "Stop and report best-so-far after this (0: none)")
      ->capture_default_str();
  c->add_option("--out", cf.out, "Counterfactual JSON path (default stdout)");
  c->add_option("--plot", cf.plot, "Write <prefix>.csv and <prefix>.svg trace");

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "Run the HTTP service");
  v->add_option("--checkpoint", sv.checkpoint, "Checkpoint path")->required();
  v->add_option("--background", sv.background, "SHAP background CSV (default: training baseline)");
  v->add_option("--host", sv.config.host, "Bind address")->capture_default_str();
  v->add_option("--port", sv.config.port, "Port (0 picks one)")->capture_default_str();
  v->add_option("--timeout-ms", sv.timeout_ms, "Counterfactual request timeout")->capture_default_str();
  v->add_option("--background-size", sv.config.background_size, "Default SHAP background draw")
      ->capture_default_str();
  v->add_option("--max-body-bytes", sv.config.max_body_bytes, "Largest accepted request body")
      ->capture_default_str();
  v->add_option("--static-dir", sv.config.static_dir, "Directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  for (const CLI::App* sub : app.get_subcommands()) {
    err << "# resolved configuration\n[" << sub->get_name() << "]\n"
        << sub->config_to_str(true, false) << std::flush;
  }

  try {
    if (*s) return run_synth(synth, out, err);
    if (*t) return run_train(tr, out, err);
    if (*e) return run_evaluate(ev, out, err);
    if (*p) return run_predict(pr, out, err);
    if (*h) return run_shap(sh, out, err);
    if (*c) return run_counterfactual(cf, out, err);
    if (*v) return run_serve(sv, out, err);
  } catch (const IoError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const RowError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const SchemaError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const IntegrityError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const SizeError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const ContractError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const ComplexityError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sleepx::cli

#endif  // SLEEPX_CLI_HPP_
