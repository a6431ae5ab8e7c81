#include "fgc/tape.hpp"

#include <stdexcept>

namespace fgc::nd {

Parameter::Parameter(std::string name_, Matrix init)
    : name(std::move(name_)),
      value(std::move(init)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

void Parameter::zero_grad() {
  if (!grad.same_shape(value)) grad = Matrix(value.rows(), value.cols());
  grad.fill(0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::vector<Var> parents, Backward backward) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_.at(p.id).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr,
                        needs});
  return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_buffer(Var v) {
  Node& node = nodes_.at(v.id);
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = Matrix(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  Node& root = nodes_.at(loss.id);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be 1x1, got " +
                                root.value.shape_string());
  }
  grad_buffer(loss)(0, 0) = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param != nullptr) {
      Parameter& p = *node.param;
      if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows(), p.value.cols());
      auto dst = p.grad.data();
      auto src = node.grad.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    } else if (node.backward) {
      // Rules only write parent buffers and never append nodes, so `node` stays valid.
      node.backward(*this, node.grad);
    }
  }
}

}  // namespace fgc::nd
