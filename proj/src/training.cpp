#include "fgc/training.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "fgc/metrics.hpp"
#include "fgc/ops.hpp"
#include "fgc/random.hpp"

namespace fgc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<nd::Matrix> snapshot(const std::vector<nd::Parameter*>& params) {
  std::vector<nd::Matrix> out;
  out.reserve(params.size());
  for (const nd::Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<nd::Parameter*>& params, const std::vector<nd::Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

const nd::Parameter* first_non_finite(const std::vector<nd::Parameter*>& params, bool grads) {
  for (const nd::Parameter* p : params) {
    if (!(grads ? p->grad : p->value).all_finite()) return p;
  }
  return nullptr;
}

double auc_on(std::span<const double> scores, std::span<const std::uint8_t> labels,
              std::span<const std::uint32_t> nodes) {
  const Subset s = select_nodes(scores, labels, nodes);
  return roc_auc(s.scores, s.labels);
}

}  // namespace

std::string_view to_string(Granularity g) { return g == Granularity::Entry ? "entry" : "node"; }

Granularity parse_granularity(std::string_view name) {
  if (name == "entry") return Granularity::Entry;
  if (name == "node") return Granularity::Node;
  throw std::invalid_argument("unknown granularity '" + std::string(name) + "' (entry|node)");
}

Graph corrupt_features(const Graph& g, const CorruptionConfig& c) {
  if (!(c.ratio >= 0.0 && c.ratio < 1.0)) {
    throw std::invalid_argument("corruption ratio must lie in [0, 1)");
  }
  if (c.ratio == 0.0) return g;
  nd::Matrix x = g.features();
  std::mt19937_64 rng(c.seed);
  std::bernoulli_distribution drop(c.ratio);
  if (c.granularity == Granularity::Entry) {
    for (auto& v : x.data())
      if (drop(rng)) v = 0.0;
  } else {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      if (!drop(rng)) continue;
      for (auto& v : x.row(r)) v = 0.0;
    }
  }
  return g.with_features(std::move(x));
}

void TrainConfig::validate() const {
  if (!(adam.lr > 0.0 && adam.lr < 1.0)) throw std::invalid_argument("lr must lie in (0, 1)");
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
  if (patience > max_epochs) throw std::invalid_argument("patience must not exceed max_epochs");
  if (recall_k && *recall_k == 0) throw std::invalid_argument("recall k must be positive");
  if (!(pos_weight > 0.0)) throw std::invalid_argument("pos_weight must be positive");
}

EarlyStopping::Decision EarlyStopping::update(double val_auc) {
  improved_ = !has_best_ || (val_auc > best_ && val_auc - best_ >= min_delta_);
  if (improved_) {
    best_ = val_auc;
    has_best_ = true;
    counter_ = 0;
  } else {
    ++counter_;
  }
  return counter_ >= patience_ ? Decision::Stop : Decision::Continue;
}

TestMetrics evaluate_test(Model& model, const Graph& g, const Split& split,
                          std::optional<std::size_t> k) {
  const auto scores = model_logits(model, g, split, PartitionMode::Eval);
  const Subset test = select_nodes(scores, g.labels(), split.test_nodes());
  TestMetrics m;
  m.k = k.value_or(test.positives());
  m.auc = roc_auc(test.scores, test.labels);
  m.recall_at_k = recall_at_k(test.scores, test.labels, m.k);
  return m;
}

RunResult train(Model& model, const Graph& g, const Split& split, const TrainConfig& tc,
                const EpochCallback& on_epoch) {
  tc.validate();
  split.validate(g.labels());
  const auto start = Clock::now();
  const GroupPartition train_part = partition_neighbors(g, split, PartitionMode::Train);
  const GroupPartition eval_part = partition_neighbors(g, split, PartitionMode::Eval);
  const auto train_nodes = split.train_nodes();
  const auto val_nodes = split.val_nodes();
  const auto params = model.parameters();
  for (nd::Parameter* p : params) p->zero_grad();

  EarlyStopping stopper(tc.patience);
  std::vector<nd::Matrix> best = snapshot(params);
  RunResult result;
  result.config = tc;

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    double loss_value = 0;
    {
      nd::Tape tape;
      nd::Var logits = model.forward(tape, g, train_part);
      nd::Var loss = nd::bce_with_logits(tape, logits, g.labels(), train_nodes, tc.pos_weight);
      loss_value = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_value)) {
        throw NumericalError(epoch, "loss",
                             "non-finite training loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
    }
    if (const nd::Parameter* bad = first_non_finite(params, true)) {
      throw NumericalError(epoch, bad->name,
                           "non-finite gradient in " + bad->name + " at epoch " +
                               std::to_string(epoch));
    }
    nd::adam_step(params, tc.adam);
    if (const nd::Parameter* bad = first_non_finite(params, false)) {
      throw NumericalError(epoch, bad->name,
                           "non-finite value in " + bad->name + " at epoch " +
                               std::to_string(epoch));
    }

    double val_auc = 0;
    {
      nd::Tape tape;
      const nd::Matrix& z = tape.value(model.forward(tape, g, eval_part));
      if (!z.all_finite()) {
        throw NumericalError(epoch, "logits", "non-finite validation logits at epoch " +
                                                  std::to_string(epoch));
      }
      val_auc = auc_on(z.data(), g.labels(), val_nodes);
    }

    const auto decision = stopper.update(val_auc);
    if (stopper.improved()) {
      best = snapshot(params);
      result.best_epoch = epoch;
      result.best_val_auc = val_auc;
    }
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(EpochRecord{epoch, loss_value, val_auc, ms_since(start)});
    if (decision == EarlyStopping::Decision::Stop) break;
  }

  restore(params, best);
  const TestMetrics test = evaluate_test(model, g, split, tc.recall_k);
  result.test_auc = test.auc;
  result.test_recall_at_k = test.recall_at_k;
  result.recall_k = test.k;
  result.wall_time_ms = ms_since(start);
  return result;
}

CorruptionConfig corruption_for(const ExperimentConfig& cfg) {
  return {cfg.dropout_ratio, cfg.granularity, derive_seed(cfg.train.seed, streams::kCorruption)};
}

ModelConfig model_config_for(const ExperimentConfig& cfg, std::size_t in_dim) {
  return {cfg.kind, in_dim, cfg.train.hidden, cfg.train.depth,
          derive_seed(cfg.train.seed, streams::kModelInit)};
}

RunResult run_experiment(const Graph& clean, const Split& split, const ExperimentConfig& cfg,
                         const EpochCallback& on_epoch, Model* trained) {
  const Graph g = corrupt_features(clean, corruption_for(cfg));
  Model model(model_config_for(cfg, g.feature_dim()));
  RunResult r = train(model, g, split, cfg.train, on_epoch);
  if (trained != nullptr) *trained = std::move(model);
  return r;
}

}  // namespace fgc
