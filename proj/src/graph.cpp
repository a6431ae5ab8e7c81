#include "fgc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace fgc {

namespace {

void check_labels(std::span<const std::uint8_t> labels, std::size_t n) {
  if (labels.size() != n) {
    throw GraphError("labels length " + std::to_string(labels.size()) + " != node count " +
                     std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 1) throw GraphError("label of node " + std::to_string(i) + " is not binary");
  }
}

void check_features(const nd::Matrix& features, std::size_t n) {
  if (features.rows() != n) {
    throw GraphError("feature matrix has " + std::to_string(features.rows()) + " rows, expected " +
                     std::to_string(n));
  }
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (double x : features.row(r)) {
      if (!std::isfinite(x)) throw GraphError("non-finite feature in row " + std::to_string(r));
    }
  }
}

std::vector<std::uint32_t> mask_nodes(const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

}  // namespace

Graph Graph::from_csr(std::vector<std::size_t> offsets, std::vector<std::uint32_t> neighbors,
                      nd::Matrix features, std::vector<std::uint8_t> labels) {
  const std::size_t n = labels.size();
  if (n == 0) throw GraphError("graph has zero nodes");
  if (offsets.size() != n + 1) throw GraphError("csr_offsets must have num_nodes+1 entries");
  if (offsets.front() != 0) throw GraphError("csr_offsets[0] must be 0");
  if (offsets.back() != neighbors.size()) {
    throw GraphError("csr_offsets[num_nodes] must equal the neighbor count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (offsets[i] > offsets[i + 1]) throw GraphError("csr_offsets must be nondecreasing");
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
      const std::uint32_t j = neighbors[e];
      if (j >= n) throw GraphError("neighbor index out of range in row " + std::to_string(i));
      if (j == i) throw GraphError("self-loop at node " + std::to_string(i));
      if (e > offsets[i] && neighbors[e - 1] >= j) {
        throw GraphError("row " + std::to_string(i) + " is not strictly ascending");
      }
    }
  }
  // Symmetry: every (i, j) needs a matching (j, i).
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
      const std::uint32_t j = neighbors[e];
      auto first = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[j]);
      auto last = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[j + 1]);
      if (!std::binary_search(first, last, static_cast<std::uint32_t>(i))) {
        throw GraphError("adjacency is not symmetric at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
      }
    }
  }
  check_features(features, n);
  check_labels(labels, n);

  Graph g;
  g.offsets_ = std::move(offsets);
  g.neighbors_ = std::move(neighbors);
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  return g;
}

Graph Graph::with_features(nd::Matrix features) const {
  if (!features.same_shape(features_)) {
    throw GraphError("with_features: expected " + features_.shape_string() + ", got " +
                     features.shape_string());
  }
  check_features(features, num_nodes());
  Graph g = *this;
  g.features_ = std::move(features);
  return g;
}

Graph Graph::with_labels(std::vector<std::uint8_t> labels) const {
  check_labels(labels, num_nodes());
  Graph g = *this;
  g.labels_ = std::move(labels);
  return g;
}

Graph build_graph(std::span<const Edge> edges, nd::Matrix features,
                  std::vector<std::uint8_t> labels) {
  const std::size_t n = labels.size();
  if (n == 0) throw GraphError("graph has zero nodes");
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw GraphError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") has an endpoint >= " + std::to_string(n));
    }
    if (u == v) continue;
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> neighbors;
  neighbors.reserve(directed.size());
  for (const auto& [u, v] : directed) {
    ++offsets[u + 1];
    neighbors.push_back(v);
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return Graph::from_csr(std::move(offsets), std::move(neighbors), std::move(features),
                         std::move(labels));
}

std::vector<Edge> edge_list(const Graph& g) {
  std::vector<Edge> out;
  out.reserve(g.num_entries() / 2);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    for (std::uint32_t j : g.neighbors(i)) {
      if (i < j) out.emplace_back(static_cast<std::uint32_t>(i), j);
    }
  }
  return out;
}

std::vector<std::uint32_t> Split::train_nodes() const { return mask_nodes(train); }
std::vector<std::uint32_t> Split::val_nodes() const { return mask_nodes(val); }
std::vector<std::uint32_t> Split::test_nodes() const { return mask_nodes(test); }

void Split::validate(std::span<const std::uint8_t> labels) const {
  const std::size_t n = labels.size();
  if (train.size() != n || val.size() != n || test.size() != n) {
    throw GraphError("split masks must have one entry per node");
  }
  const std::pair<const char*, const std::vector<std::uint8_t>*> masks[] = {
      {"train", &train}, {"val", &val}, {"test", &test}};
  for (std::size_t i = 0; i < n; ++i) {
    if (int(train[i] != 0) + int(val[i] != 0) + int(test[i] != 0) > 1) {
      throw GraphError("split masks overlap at node " + std::to_string(i));
    }
  }
  for (const auto& [name, mask] : masks) {
    bool pos = false;
    bool neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*mask)[i]) continue;
      (labels[i] ? pos : neg) = true;
    }
    if (!pos || !neg) {
      throw GraphError(std::string(name) + " mask must contain both a positive and a negative");
    }
  }
}

Split make_split(const Graph& g, SplitFractions fractions, std::uint64_t seed) {
  const double f[3] = {fractions.train, fractions.val, fractions.test};
  for (double x : f) {
    if (!(x > 0.0)) throw GraphError("split fractions must all be positive");
  }
  const double total = f[0] + f[1] + f[2];
  if (total > 1.0 + 1e-12) throw GraphError("split fractions sum to more than 1");

  const std::size_t n = g.num_nodes();
  Split split{std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0),
              std::vector<std::uint8_t>(n, 0)};
  std::vector<std::uint8_t>* masks[3] = {&split.train, &split.val, &split.test};

  std::mt19937_64 rng(seed);
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (g.labels()[i] == cls) members.push_back(static_cast<std::uint32_t>(i));
    std::shuffle(members.begin(), members.end(), rng);

    // Largest-remainder allocation with at least one member per mask.
    const auto m = static_cast<double>(members.size());
    const auto target = static_cast<std::size_t>(std::floor(total * m + 1e-9));
    std::size_t counts[3];
    double remainder[3];
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = f[k] * m;
      counts[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact + 1e-9)));
      remainder[k] = exact - std::floor(exact + 1e-9);
      assigned += counts[k];
    }
    if (assigned > members.size()) {
      throw GraphError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                       " members, too few to place one in every split mask");
    }
    while (assigned < target) {
      int best = 0;
      for (int k = 1; k < 3; ++k)
        if (remainder[k] > remainder[best]) best = k;
      ++counts[best];
      remainder[best] = -1.0;
      ++assigned;
    }
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t c = 0; c < counts[k]; ++c) (*masks[k])[members[pos++]] = 1;
    }
  }
  split.validate(g.labels());
  return split;
}

GroupPartition partition_neighbors(const Graph& g, const Split& split, PartitionMode mode) {
  const std::size_t n = g.num_nodes();
  GroupPartition p;
  for (NeighborGroup* grp : {&p.fraud, &p.benign, &p.unknown}) {
    grp->offsets.assign(n + 1, 0);
  }
  if (mode == PartitionMode::Eval) {
    p.unknown.offsets.assign(g.csr_offsets().begin(), g.csr_offsets().end());
    p.unknown.indices.assign(g.csr_neighbors().begin(), g.csr_neighbors().end());
    return p;
  }
  if (split.train.size() != n) throw GraphError("train mask length does not match the graph");
  const auto labels = g.labels();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : g.neighbors(i)) {
      NeighborGroup& dst = !split.train[j] ? p.unknown : (labels[j] ? p.fraud : p.benign);
      dst.indices.push_back(j);
    }
    p.fraud.offsets[i + 1] = p.fraud.indices.size();
    p.benign.offsets[i + 1] = p.benign.indices.size();
    p.unknown.offsets[i + 1] = p.unknown.indices.size();
  }
  return p;
}

}  // namespace fgc
