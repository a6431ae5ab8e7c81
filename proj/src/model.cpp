#include "fgc/model.hpp"

#include <array>
#include <stdexcept>

#include "fgc/ops.hpp"

namespace fgc {

using nd::Matrix;
using nd::Parameter;
using nd::Tape;
using nd::Var;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::FgcComp: return "fgc";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::SageMean: return "sage";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "fgc") return ModelKind::FgcComp;
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "sage") return ModelKind::SageMean;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (fgc|mlp|sage)");
}

DenseLayer DenseLayer::init(std::size_t in, std::size_t out, std::mt19937_64& rng,
                            const std::string& name) {
  return DenseLayer{Parameter(name + ".weight", nd::glorot_uniform(out, in, rng)),
                    Parameter(name + ".bias", Matrix(1, out))};
}

Var DenseLayer::apply(Tape& t, Var x) {
  return nd::add_row_bias(t, nd::linear(t, x, t.parameter(weight)), t.parameter(bias));
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.in_dim == 0) throw std::invalid_argument("Model: in_dim must be positive");
  if (cfg.hidden < 2) throw std::invalid_argument("Model: hidden width must be >= 2");
  std::mt19937_64 rng(cfg.seed);
  std::size_t width = cfg.in_dim;
  switch (cfg.kind) {
    case ModelKind::FgcComp:
      if (cfg.depth == 0) throw std::invalid_argument("Model: fgc needs depth >= 1");
      for (std::size_t l = 0; l < cfg.depth; ++l) {
        fgc_layers_.push_back(
            FgcLayerParams::init(width, cfg.hidden, rng, "fgc" + std::to_string(l)));
        width = cfg.hidden;
      }
      break;
    case ModelKind::SageMean:
      if (cfg.depth == 0) throw std::invalid_argument("Model: sage needs depth >= 1");
      for (std::size_t l = 0; l < cfg.depth; ++l) {
        sage_layers_.push_back(
            DenseLayer::init(2 * width, cfg.hidden, rng, "sage" + std::to_string(l)));
        width = cfg.hidden;
      }
      break;
    case ModelKind::Mlp:
      break;
  }
  head_hidden_ = DenseLayer::init(width, cfg.hidden, rng, "head.hidden");
  head_out_ = DenseLayer::init(cfg.hidden, 1, rng, "head.out");
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : fgc_layers_)
    for (Parameter* p : layer.parameters()) out.push_back(p);
  for (auto& layer : sage_layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  for (DenseLayer* d : {&head_hidden_, &head_out_}) {
    out.push_back(&d->weight);
    out.push_back(&d->bias);
  }
  return out;
}

Var Model::forward(Tape& t, const Graph& g, const GroupPartition& partition) {
  if (g.feature_dim() != cfg_.in_dim) {
    throw std::invalid_argument("Model: graph has " + std::to_string(g.feature_dim()) +
                                " features, model expects " + std::to_string(cfg_.in_dim));
  }
  Var h = t.constant(g.features());
  switch (cfg_.kind) {
    case ModelKind::FgcComp:
      for (auto& layer : fgc_layers_) h = layer_forward(t, partition, h, bind(t, layer));
      break;
    case ModelKind::SageMean: {
      const kernels::Segments all{g.csr_offsets(), g.csr_neighbors()};
      for (auto& layer : sage_layers_) {
        const std::array<Var, 2> parts{h, nd::segment_mean(t, h, all)};
        h = nd::relu(t, layer.apply(t, nd::concat_cols(t, parts)));
      }
      break;
    }
    case ModelKind::Mlp:
      break;
  }
  return head_out_.apply(t, nd::relu(t, head_hidden_.apply(t, h)));
}

Var model_forward(Tape& t, Model& model, const Graph& g, const Split& split, PartitionMode mode) {
  const GroupPartition& partition = model.config().kind == ModelKind::FgcComp
                                        ? t.hold(partition_neighbors(g, split, mode))
                                        : t.hold(GroupPartition{});
  return model.forward(t, g, partition);
}

std::vector<double> model_logits(Model& model, const Graph& g, const Split& split,
                                 PartitionMode mode) {
  Tape t;
  const Matrix& z = t.value(model_forward(t, model, g, split, mode));
  return {z.data().begin(), z.data().end()};
}

std::vector<double> predict_proba(Model& model, const Graph& g, const Split& split) {
  std::vector<double> p = model_logits(model, g, split, PartitionMode::Eval);
  for (double& x : p) x = nd::sigmoid(x);
  return p;
}

}  // namespace fgc
