#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fgc/kernels.hpp"
#include "fgc/matrix.hpp"

namespace fgc {

/// Raised when graph or split data violates a structural invariant.
class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Immutable undirected graph in CSR form with node features and binary labels
/// (1 = fraud). Rows are sorted, deduplicated, symmetric, and free of self-loops.
class Graph {
 public:
  Graph() = default;

  /// Validates every invariant and throws GraphError on the first violation.
  static Graph from_csr(std::vector<std::size_t> offsets, std::vector<std::uint32_t> neighbors,
                        nd::Matrix features, std::vector<std::uint8_t> labels);

  std::size_t num_nodes() const noexcept { return labels_.size(); }
  std::size_t feature_dim() const noexcept { return features_.cols(); }
  /// Number of stored directed entries, i.e. twice the undirected edge count.
  std::size_t num_entries() const noexcept { return neighbors_.size(); }

  std::span<const std::size_t> csr_offsets() const noexcept { return offsets_; }
  std::span<const std::uint32_t> csr_neighbors() const noexcept { return neighbors_; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }

  const nd::Matrix& features() const noexcept { return features_; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  /// Copy with the feature matrix replaced (same shape, finite).
  Graph with_features(nd::Matrix features) const;
  /// Copy with the label vector replaced (same length, binary).
  Graph with_labels(std::vector<std::uint8_t> labels) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> neighbors_;
  nd::Matrix features_;
  std::vector<std::uint8_t> labels_;
};

/// Builds a validated graph from an undirected edge list. Duplicates collapse,
/// self-loops are dropped, and both directions are stored.
Graph build_graph(std::span<const Edge> edges, nd::Matrix features,
                  std::vector<std::uint8_t> labels);

/// Each undirected edge once, as (i, j) with i < j, in CSR order.
std::vector<Edge> edge_list(const Graph& g);

/// Disjoint train / validation / test node masks.
struct Split {
  std::vector<std::uint8_t> train;
  std::vector<std::uint8_t> val;
  std::vector<std::uint8_t> test;

  std::vector<std::uint32_t> train_nodes() const;
  std::vector<std::uint32_t> val_nodes() const;
  std::vector<std::uint32_t> test_nodes() const;

  /// Checks lengths, pairwise disjointness, and that each mask holds both classes.
  void validate(std::span<const std::uint8_t> labels) const;

  friend bool operator==(const Split&, const Split&) = default;
};

struct SplitFractions {
  double train = 0.4;
  double val = 0.2;
  double test = 0.4;
};

/// Label-stratified split. Each class is shuffled with a generator seeded by
/// `seed` and cut by the fractions (largest remainder, at least one per mask).
Split make_split(const Graph& g, SplitFractions fractions, std::uint64_t seed);

/// One neighbor group for every center node, stored CSR-style.
struct NeighborGroup {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> indices;

  std::span<const std::uint32_t> members(std::size_t i) const {
    return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::size_t size(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  kernels::Segments segments() const { return {offsets, indices}; }

  friend bool operator==(const NeighborGroup&, const NeighborGroup&) = default;
};

/// Fraud / benign / unknown neighbor sets of every node.
struct GroupPartition {
  NeighborGroup fraud;
  NeighborGroup benign;
  NeighborGroup unknown;

  friend bool operator==(const GroupPartition&, const GroupPartition&) = default;
};

enum class PartitionMode { Train, Eval };

/// Train: a neighbor is fraud/benign only if it is a training node, else unknown.
/// Eval: every neighbor is unknown, so no label is read at all.
GroupPartition partition_neighbors(const Graph& g, const Split& split, PartitionMode mode);

}  // namespace fgc
