#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fgc/matrix.hpp"

namespace fgc::nd {

/// Trainable tensor: value, gradient accumulator, and Adam moment state.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string name, Matrix init);

  void zero_grad();
};

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape. Nodes are appended in execution order; backward() walks
/// them in exact reverse order and finally adds leaf gradients into the
/// Parameter accumulators. A Tape is single-use and single-threaded.
class Tape {
 public:
  /// Receives the gradient of the node being processed; propagates it to the
  /// node's inputs through Tape::grad_buffer.
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Var constant(Matrix value);
  /// Leaf bound to `p`. `p` must outlive the tape.
  Var parameter(Parameter& p);
  /// Records a computed node. Gradients flow only if some parent requires them.
  Var record(Matrix value, std::vector<Var> parents, Backward backward);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  /// Gradient accumulated at `v` by the last backward(); empty if none reached it.
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  /// Zero-initialized (on first use) gradient slot of `v`, for use in Backward.
  Matrix& grad_buffer(Var v);

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Keeps `obj` alive for the lifetime of the tape (e.g. index arrays that
  /// backward rules read through spans).
  template <class T>
  const T& hold(T obj) {
    auto owned = std::make_shared<const T>(std::move(obj));
    held_.push_back(owned);
    return *owned;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<std::shared_ptr<const void>> held_;
};

}  // namespace fgc::nd
