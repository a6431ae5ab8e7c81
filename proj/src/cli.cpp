#include "fgc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "fgc/checkpoint.hpp"
#include "fgc/graph_io.hpp"
#include "fgc/kernels.hpp"
#include "fgc/metrics.hpp"
#include "fgc/synth.hpp"
#include "fgc/training.hpp"

namespace fgc::cli {

namespace {

using json = nlohmann::ordered_json;

/// Flag values that parse but are not acceptable.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure reading or writing a non-graph artifact (results, logs, dumps).
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string data;
  std::string model = "fgc";
  std::size_t hidden = 64;
  std::size_t depth = 1;
  double lr = 1e-3;
  double dropout_ratio = 0.0;
  std::string granularity = "entry";
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::string split_fractions = "0.4,0.2,0.4";
  std::size_t epochs = 300;
  std::size_t patience = 30;
  std::size_t k = 0;
  double pos_weight = 1.0;
};

void add_data_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--data", f.data, "Graph file (GraphFileV1)")->required();
  cmd->add_option("--split-seed", f.split_seed, "Seed of the stratified split")
      ->capture_default_str();
  cmd->add_option("--split-fractions", f.split_fractions, "train,val,test fractions")
      ->capture_default_str();
  cmd->add_option("--dropout-ratio", f.dropout_ratio, "Feature dropout ratio in [0,1)")
      ->capture_default_str();
  cmd->add_option("--granularity", f.granularity, "entry|node")
      ->check(CLI::IsMember({"entry", "node"}))
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Run seed (init and corruption)")->capture_default_str();
  cmd->add_option("--hidden", f.hidden, "Hidden width")->capture_default_str();
  cmd->add_option("--depth", f.depth, "Graph layers before the head")->capture_default_str();
  cmd->add_option("--k", f.k, "Recall@K budget (default: positives in the test mask)");
}

void add_train_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--patience", f.patience, "Early-stopping patience")->capture_default_str();
  cmd->add_option("--pos-weight", f.pos_weight, "BCE weight on positives")->capture_default_str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) throw UsageError("empty entry in list '" + s + "'");
    out.push_back(item);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw UsageError("not a non-negative integer: '" + s + "'");
  }
  return std::stoull(s);
}

SplitFractions parse_fractions(const std::string& s) {
  const auto parts = split_list(s);
  if (parts.size() != 3) throw UsageError("--split-fractions needs three values");
  return {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
}

ExperimentConfig experiment_from(const RunFlags& f) {
  ExperimentConfig cfg;
  try {
    cfg.kind = parse_model_kind(f.model);
    cfg.granularity = parse_granularity(f.granularity);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.dropout_ratio = f.dropout_ratio;
  cfg.train.adam.lr = f.lr;
  cfg.train.max_epochs = f.epochs;
  cfg.train.patience = f.patience;
  cfg.train.seed = f.seed;
  cfg.train.hidden = f.hidden;
  cfg.train.depth = f.depth;
  cfg.train.pos_weight = f.pos_weight;
  if (f.k > 0) cfg.train.recall_k = f.k;
  if (!(f.dropout_ratio >= 0.0 && f.dropout_ratio < 1.0)) {
    throw UsageError("--dropout-ratio must lie in [0, 1)");
  }
  if (f.hidden < 2) throw UsageError("--hidden must be at least 2");
  if (f.depth < 1) throw UsageError("--depth must be at least 1");
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct Dataset {
  Graph graph;
  Split split;
};

Dataset load_dataset(const RunFlags& f) {
  const SplitFractions fractions = parse_fractions(f.split_fractions);
  Graph g = load_graph(f.data);
  Split split = make_split(g, fractions, f.split_seed);
  return {std::move(g), std::move(split)};
}

std::string fixed6(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string ratio_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

json config_json(const ExperimentConfig& cfg, const RunFlags& f) {
  json c;
  c["data"] = f.data;
  c["model"] = std::string(to_string(cfg.kind));
  c["hidden"] = cfg.train.hidden;
  c["depth"] = cfg.train.depth;
  c["lr"] = cfg.train.adam.lr;
  c["beta1"] = cfg.train.adam.beta1;
  c["beta2"] = cfg.train.adam.beta2;
  c["adam_eps"] = cfg.train.adam.eps;
  c["max_epochs"] = cfg.train.max_epochs;
  c["patience"] = cfg.train.patience;
  c["pos_weight"] = cfg.train.pos_weight;
  c["dropout_ratio"] = cfg.dropout_ratio;
  c["granularity"] = std::string(to_string(cfg.granularity));
  c["seed"] = cfg.train.seed;
  c["split_seed"] = f.split_seed;
  c["split_fractions"] = f.split_fractions;
  if (cfg.train.recall_k) c["k"] = *cfg.train.recall_k;
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw OutputError("write failed for " + path);
}

// --- synth -----------------------------------------------------------------

struct SynthFlags {
  SynthConfig cfg;
  std::string out;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  SynthDataset ds;
  try {
    ds = synth_planted_anomaly(f.cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  save_graph(ds.graph, f.out);
  std::size_t anomalies = 0;
  for (auto y : ds.graph.labels()) anomalies += y;
  out << "wrote " << f.out << ": " << ds.graph.num_nodes() << " nodes, "
      << ds.graph.num_entries() / 2 << " edges, " << ds.graph.feature_dim() << " features, "
      << anomalies << " anomalies\n";
  return kExitOk;
}

// --- info ------------------------------------------------------------------

int cmd_info(const std::string& path, std::ostream& out) {
  const Graph g = load_graph(path);
  std::size_t anomalies = 0;
  for (auto y : g.labels()) anomalies += y;
  json j;
  j["nodes"] = g.num_nodes();
  j["edges"] = g.num_entries() / 2;
  j["directed_entries"] = g.num_entries();
  j["features"] = g.feature_dim();
  j["anomalies"] = anomalies;
  j["anomaly_rate"] = static_cast<double>(anomalies) / static_cast<double>(g.num_nodes());
  out << j.dump(2) << "\n";
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainFlags {
  RunFlags run;
  std::string out;
  std::string checkpoint;
  std::string log;
};

int cmd_train(const TrainFlags& f, std::ostream& out) {
  const ExperimentConfig cfg = experiment_from(f.run);
  const Dataset ds = load_dataset(f.run);

  std::ofstream log;
  if (!f.log.empty()) {
    log.open(f.log, std::ios::trunc);
    if (!log) throw OutputError("cannot open " + f.log + " for writing");
  }
  const EpochCallback on_epoch = [&](const EpochRecord& r) {
    if (!log.is_open()) return;
    json line;
    line["epoch"] = r.epoch;
    line["train_loss"] = r.train_loss;
    line["val_auc"] = r.val_auc;
    line["elapsed_ms"] = r.elapsed_ms;
    log << line.dump() << "\n";
  };

  Model model(model_config_for(cfg, ds.graph.feature_dim()));
  const RunResult r = run_experiment(ds.graph, ds.split, cfg, on_epoch, &model);
  if (!f.checkpoint.empty()) save_checkpoint(model, f.checkpoint);

  json j;
  j["format"] = "fgc-run-result/1";
  j["config"] = config_json(cfg, f.run);
  j["best_val_auc"] = r.best_val_auc;
  j["test_auc"] = r.test_auc;
  j["test_recall_at_k"] = r.test_recall_at_k;
  j["recall_k"] = r.recall_k;
  j["epochs_run"] = r.epochs_run;
  j["best_epoch"] = r.best_epoch;
  j["wall_time_ms"] = r.wall_time_ms;
  write_text(f.out, j.dump(2) + "\n");
  out << to_string(cfg.kind) << ": val_auc=" << fixed6(r.best_val_auc)
      << " test_auc=" << fixed6(r.test_auc) << " recall@" << r.recall_k << "="
      << fixed6(r.test_recall_at_k) << " epochs=" << r.epochs_run << "\n";
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalFlags {
  RunFlags run;
  std::string checkpoint;
  std::string out;
  std::string dump_scores;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const ExperimentConfig cfg = experiment_from(f.run);
  const Dataset ds = load_dataset(f.run);
  const Graph g = corrupt_features(ds.graph, corruption_for(cfg));
  Model model(model_config_for(cfg, g.feature_dim()));
  load_checkpoint(model, f.checkpoint);

  const TestMetrics m = evaluate_test(model, g, ds.split, cfg.train.recall_k);
  if (!f.dump_scores.empty()) {
    const auto probs = predict_proba(model, g, ds.split);
    std::string text = "node,score\n";
    char buf[64];
    for (std::size_t i = 0; i < probs.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, probs[i]);
      text += buf;
    }
    write_text(f.dump_scores, text);
  }
  json j;
  j["format"] = "fgc-eval-result/1";
  j["model"] = std::string(to_string(cfg.kind));
  j["test_auc"] = m.auc;
  j["test_recall_at_k"] = m.recall_at_k;
  j["recall_k"] = m.k;
  const std::string text = j.dump(2) + "\n";
  if (!f.out.empty()) write_text(f.out, text);
  out << text;
  return kExitOk;
}

// --- sweep -----------------------------------------------------------------

struct SweepFlags {
  RunFlags run;
  std::string ratios = "20,30,40,50";
  std::string seeds = "0";
  std::string models = "fgc,mlp";
  std::string out;
  std::size_t jobs = 1;
};

struct SweepCell {
  double ratio = 0;
  ModelKind kind = ModelKind::FgcComp;
  std::uint64_t seed = 0;
  std::string row;
};

std::string run_cell(const Dataset& ds, const RunFlags& base, const SweepCell& cell) {
  RunFlags flags = base;
  flags.model = std::string(to_string(cell.kind));
  flags.seed = cell.seed;
  flags.dropout_ratio = cell.ratio;
  std::string auc = "nan", recall = "nan", status = "ok", epochs = "0";
  const auto start = std::chrono::steady_clock::now();
  try {
    const RunResult r = run_experiment(ds.graph, ds.split, experiment_from(flags));
    auc = fixed6(r.test_auc);
    recall = fixed6(r.test_recall_at_k);
    epochs = std::to_string(r.epochs_run);
  } catch (const NumericalError&) {
    status = "numerical_error";
  } catch (const GraphError&) {
    status = "data_error";
  } catch (const MetricError&) {
    status = "data_error";
  } catch (const std::exception&) {
    status = "error";
  }
  const double wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  char wall_buf[32];
  std::snprintf(wall_buf, sizeof wall_buf, "%.0f", wall);
  return ratio_text(cell.ratio) + "," + flags.model + "," + std::to_string(cell.seed) + "," + auc +
         "," + recall + "," + status + "," + epochs + "," + wall_buf;
}

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
  std::vector<double> ratios;
  for (const auto& r : split_list(f.ratios)) {
    const double pct = parse_double(r);
    if (!(pct >= 0.0 && pct < 100.0)) throw UsageError("--ratios are percentages in [0, 100)");
    ratios.push_back(pct / 100.0);
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(f.seeds)) seeds.push_back(parse_u64(s));
  std::vector<ModelKind> kinds;
  for (const auto& m : split_list(f.models)) {
    try {
      kinds.push_back(parse_model_kind(m));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (f.jobs == 0) throw UsageError("--jobs must be at least 1");
  experiment_from(f.run);  // reject bad shared flags before any work
  const Dataset ds = load_dataset(f.run);

  std::vector<SweepCell> cells;
  for (double ratio : ratios)
    for (ModelKind kind : kinds)
      for (std::uint64_t seed : seeds) cells.push_back({ratio, kind, seed, {}});

  if (f.jobs == 1) {
    for (auto& cell : cells) cell.row = run_cell(ds, f.run, cell);
  } else {
    // Cells share only read-only data; kernels run serially inside each worker.
    const bool was_parallel = kernels::parallel_enabled();
    kernels::set_parallel_enabled(false);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(f.jobs, cells.size()); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          cells[i].row = run_cell(ds, f.run, cells[i]);
        }
      });
    }
    for (auto& w : workers) w.join();
    kernels::set_parallel_enabled(was_parallel);
  }

  std::string csv = std::string(kSweepCsvHeader) + "\n";
  for (const auto& cell : cells) csv += cell.row + "\n";
  if (f.out.empty()) {
    out << csv;
  } else {
    write_text(f.out, csv);
    out << "wrote " << cells.size() << " rows to " << f.out << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neighbor-grouped attribute completion for graph anomaly detection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a planted-anomaly graph file");
  synth_cmd->add_option("--nodes", synth.cfg.nodes)->capture_default_str();
  synth_cmd->add_option("--dim", synth.cfg.dim)->capture_default_str();
  synth_cmd->add_option("--anomaly-frac", synth.cfg.anomaly_frac)->capture_default_str();
  synth_cmd->add_option("--homophily", synth.cfg.homophily)->capture_default_str();
  synth_cmd->add_option("--mean-degree", synth.cfg.mean_degree)->capture_default_str();
  synth_cmd->add_option("--shift", synth.cfg.shift)->capture_default_str();
  synth_cmd->add_option("--seed", synth.cfg.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output graph file")->required();

  std::string info_path;
  auto* info_cmd = app.add_subcommand("info", "Print graph file statistics");
  info_cmd->add_option("--data", info_path)->required();

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write a result file");
  add_data_flags(train_cmd, train.run);
  add_train_flags(train_cmd, train.run);
  train_cmd->add_option("--model", train.run.model, "fgc|mlp|sage")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Result file (JSON)")->required();
  train_cmd->add_option("--checkpoint", train.checkpoint, "Write the best model here");
  train_cmd->add_option("--log", train.log, "Per-epoch log (JSON lines)");

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test mask");
  add_data_flags(eval_cmd, eval.run);
  eval_cmd->add_option("--model", eval.run.model, "fgc|mlp|sage")->capture_default_str();
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--out", eval.out, "Also write the metrics JSON here");
  eval_cmd->add_option("--dump-scores", eval.dump_scores, "Write per-node scores (CSV)");

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Robustness sweep over dropout ratios");
  add_data_flags(sweep_cmd, sweep.run);
  add_train_flags(sweep_cmd, sweep.run);
  sweep_cmd->add_option("--ratios", sweep.ratios, "Dropout percentages")->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Run seeds")->capture_default_str();
  sweep_cmd->add_option("--models", sweep.models, "Model kinds")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "CSV output (default: stdout)");
  sweep_cmd->add_option("--jobs", sweep.jobs, "Cells run concurrently")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*info_cmd) return cmd_info(info_path, out);
    if (*train_cmd) return cmd_train(train, out);
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*sweep_cmd) return cmd_sweep(sweep, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << " (epoch " << e.epoch() << ", block " << e.block()
        << ")\n";
    return kExitNumerical;
  } catch (const GraphFileError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitData;
  } catch (const GraphError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const MetricError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const OutputError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace fgc::cli
