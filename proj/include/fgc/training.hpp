#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fgc/graph.hpp"
#include "fgc/model.hpp"
#include "fgc/optim.hpp"

namespace fgc {

enum class Granularity { Entry, Node };
std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view name);

/// Missing-attribute simulation: zero feature entries (or whole rows) at random.
struct CorruptionConfig {
  double ratio = 0.0;  // in [0, 1)
  Granularity granularity = Granularity::Entry;
  std::uint64_t seed = 0;
};

/// One mask drawn from `c.seed`, applied to the whole feature matrix. The
/// result stands in for the dataset during training and evaluation alike.
Graph corrupt_features(const Graph& g, const CorruptionConfig& c);

struct TrainConfig {
  nd::AdamConfig adam{};
  std::size_t max_epochs = 300;
  std::size_t patience = 30;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  std::size_t depth = 1;
  /// Recall@K budget; defaults to the positives in the test mask.
  std::optional<std::size_t> recall_k;
  /// Weight on positive-class BCE terms; 1 reproduces plain BCE.
  double pos_weight = 1.0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_auc = 0;
  double elapsed_ms = 0;
};
using EpochCallback = std::function<void(const EpochRecord&)>;

struct RunResult {
  double best_val_auc = 0;
  double test_auc = 0;
  double test_recall_at_k = 0;
  std::size_t recall_k = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double wall_time_ms = 0;
  TrainConfig config;
};

/// Raised when the loss, a gradient, or a parameter stops being finite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::size_t epoch, std::string block, const std::string& what)
      : std::runtime_error(what), epoch_(epoch), block_(std::move(block)) {}
  std::size_t epoch() const noexcept { return epoch_; }
  const std::string& block() const noexcept { return block_; }

 private:
  std::size_t epoch_;
  std::string block_;
};

/// Validation-AUC early stopping. An improvement must beat the best value by at
/// least `min_delta`; training stops once `patience` epochs in a row fail to
/// improve (patience 0 stops after the first epoch).
class EarlyStopping {
 public:
  enum class Decision { Continue, Stop };

  explicit EarlyStopping(std::size_t patience, double min_delta = 1e-6)
      : patience_(patience), min_delta_(min_delta) {}

  Decision update(double val_auc);
  bool improved() const noexcept { return improved_; }
  double best() const noexcept { return best_; }
  std::size_t counter() const noexcept { return counter_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = -1.0;
  bool has_best_ = false;
  bool improved_ = false;
  std::size_t counter_ = 0;
};

/// Full-batch training: Train-mode forward, BCE on train nodes, Adam; then
/// Eval-mode validation AUC for early stopping. The best epoch's parameters are
/// restored into `model` before the Eval-mode test metrics are computed.
RunResult train(Model& model, const Graph& g, const Split& split, const TrainConfig& tc,
                const EpochCallback& on_epoch = {});

/// Eval-mode test metrics of `model` as it stands.
struct TestMetrics {
  double auc = 0;
  double recall_at_k = 0;
  std::size_t k = 0;
};
TestMetrics evaluate_test(Model& model, const Graph& g, const Split& split,
                          std::optional<std::size_t> k = std::nullopt);

/// One complete run: corrupt, build the model, train.
struct ExperimentConfig {
  ModelKind kind = ModelKind::FgcComp;
  TrainConfig train{};
  double dropout_ratio = 0.0;
  Granularity granularity = Granularity::Entry;
};

/// Corruption and init seeds are derived from train.seed.
CorruptionConfig corruption_for(const ExperimentConfig& cfg);
ModelConfig model_config_for(const ExperimentConfig& cfg, std::size_t in_dim);
RunResult run_experiment(const Graph& clean, const Split& split, const ExperimentConfig& cfg,
                         const EpochCallback& on_epoch = {}, Model* trained = nullptr);

}  // namespace fgc
