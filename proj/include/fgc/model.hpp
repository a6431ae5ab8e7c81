#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fgc/fgc_layer.hpp"
#include "fgc/graph.hpp"
#include "fgc/tape.hpp"

namespace fgc {

enum class ModelKind { FgcComp, Mlp, SageMean };

/// "fgc", "mlp", "sage".
std::string_view to_string(ModelKind kind);
/// Inverse of to_string; throws std::invalid_argument on unknown names.
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::FgcComp;
  std::size_t in_dim = 0;
  std::size_t hidden = 64;
  /// Graph layers before the head; ignored by Mlp.
  std::size_t depth = 1;
  std::uint64_t seed = 0;
};

/// y = x · Wᵀ + b.
struct DenseLayer {
  nd::Parameter weight;  // out × in
  nd::Parameter bias;    // 1 × out

  static DenseLayer init(std::size_t in, std::size_t out, std::mt19937_64& rng,
                         const std::string& name);
  nd::Var apply(nd::Tape& t, nd::Var x);
};

/// Graph encoder plus a two-layer MLP head emitting one logit per node.
///   FgcComp:  depth × grouped completion layer, then head.
///   Mlp:      head on raw features; the graph is ignored.
///   SageMean: depth × relu(W [h_i ‖ mean_{N(i)} h_j] + b), then head.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const noexcept { return cfg_; }

  /// Every trainable parameter exactly once, in a fixed order (checkpoint order).
  std::vector<nd::Parameter*> parameters();

  std::vector<FgcLayerParams>& fgc_layers() noexcept { return fgc_layers_; }
  std::vector<DenseLayer>& sage_layers() noexcept { return sage_layers_; }
  DenseLayer& head_hidden() noexcept { return head_hidden_; }
  DenseLayer& head_out() noexcept { return head_out_; }

  /// n×1 logits. `g` and `partition` must outlive the tape.
  nd::Var forward(nd::Tape& t, const Graph& g, const GroupPartition& partition);

 private:
  ModelConfig cfg_;
  std::vector<FgcLayerParams> fgc_layers_;
  std::vector<DenseLayer> sage_layers_;
  DenseLayer head_hidden_;
  DenseLayer head_out_;
};

/// Partitions neighbors for `mode` and runs the model. `g` must outlive the tape.
nd::Var model_forward(nd::Tape& t, Model& model, const Graph& g, const Split& split,
                      PartitionMode mode);

/// Logits as a flat vector, without keeping the tape.
std::vector<double> model_logits(Model& model, const Graph& g, const Split& split,
                                 PartitionMode mode);

/// sigmoid of the Eval-mode logits.
std::vector<double> predict_proba(Model& model, const Graph& g, const Split& split);

}  // namespace fgc
