#pragma once

// Fixtures and brute-force oracles shared by the unit tests and the acceptance
// runner. Oracles here are deliberately naive and never call the code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fgc/graph.hpp"
#include "fgc/matrix.hpp"

namespace fgc::testing {

inline nd::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  nd::Matrix m(rows, cols);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

// Erdős–Rényi graph with uniform features and random labels. Nodes with index
// below `isolated` get no edges at all.
inline Graph random_graph(std::size_t n, double edge_prob, std::size_t dim, std::uint64_t seed,
                          std::size_t isolated = 0) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(edge_prob);
  std::vector<Edge> edges;
  for (std::uint32_t i = static_cast<std::uint32_t>(isolated); i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(i, j);
    }
  }
  std::bernoulli_distribution fraud(0.3);
  std::vector<std::uint8_t> labels(n);
  for (auto& l : labels) l = fraud(rng) ? 1 : 0;
  return build_graph(edges, random_matrix(n, dim, rng), std::move(labels));
}

// Masks drawn independently per node (train 0.5, val 0.2, test 0.2, none 0.1).
// Not guaranteed to hold both classes per mask; only for partition tests.
inline Split random_split(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick({5, 2, 2, 1});
  Split s{std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0),
          std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    switch (pick(rng)) {
      case 0: s.train[i] = 1; break;
      case 1: s.val[i] = 1; break;
      case 2: s.test[i] = 1; break;
      default: break;
    }
  }
  return s;
}

// Per-center neighbor sets, decided edge by edge from an adjacency set.
struct NaiveGroups {
  std::vector<std::vector<std::uint32_t>> fraud, benign, unknown;
};

inline NaiveGroups naive_partition(const Graph& g, const Split& split, bool train_mode) {
  const std::size_t n = g.num_nodes();
  std::set<std::pair<std::uint32_t, std::uint32_t>> adj;
  for (const auto& [i, j] : edge_list(g)) {
    adj.emplace(i, j);
    adj.emplace(j, i);
  }
  NaiveGroups out{std::vector<std::vector<std::uint32_t>>(n),
                  std::vector<std::vector<std::uint32_t>>(n),
                  std::vector<std::vector<std::uint32_t>>(n)};
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (!adj.count({i, j})) continue;
      if (train_mode && split.train[j]) {
        (g.labels()[j] ? out.fraud : out.benign)[i].push_back(j);
      } else {
        out.unknown[i].push_back(j);
      }
    }
  }
  return out;
}

// Double-loop mean of the rows of h listed in `members`, zero when empty.
inline std::vector<double> naive_mean(const nd::Matrix& h, const std::vector<std::uint32_t>& members) {
  std::vector<double> m(h.cols(), 0.0);
  if (members.empty()) return m;
  for (std::size_t c = 0; c < h.cols(); ++c) {
    double s = 0;
    for (auto j : members) s += h(j, c);
    m[c] = s / static_cast<double>(members.size());
  }
  return m;
}

// AUC by counting every (positive, negative) pair; exact in integer halves.
inline double pair_count_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  std::int64_t halves = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) halves += 2;
      else if (scores[i] == scores[j]) halves += 1;
    }
  }
  return static_cast<double>(halves) / (2.0 * static_cast<double>(pairs));
}

// Recall@k by repeatedly picking the best remaining score, lowest index first.
inline double enumerate_recall(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                               std::size_t k) {
  std::vector<bool> taken(scores.size(), false);
  std::size_t hits = 0, positives = 0;
  for (auto l : labels) positives += l;
  for (std::size_t round = 0; round < std::min(k, scores.size()); ++round) {
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (taken[i]) continue;
      if (best == scores.size() || scores[i] > scores[best]) best = i;
    }
    taken[best] = true;
    hits += labels[best];
  }
  return static_cast<double>(hits) / static_cast<double>(positives);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fgc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fgc::testing
