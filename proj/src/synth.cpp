#include "fgc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace fgc {

SynthDataset synth_planted_anomaly(const SynthConfig& cfg) {
  if (!(cfg.anomaly_frac > 0.0 && cfg.anomaly_frac < 0.5)) {
    throw std::invalid_argument("synth: anomaly_frac must lie in (0, 0.5)");
  }
  if (!(cfg.homophily >= 0.0 && cfg.homophily <= 1.0)) {
    throw std::invalid_argument("synth: homophily must lie in [0, 1]");
  }
  if (cfg.dim == 0) throw std::invalid_argument("synth: dim must be positive");
  if (!(cfg.mean_degree >= 0.0)) throw std::invalid_argument("synth: mean_degree must be >= 0");
  const std::size_t n = cfg.nodes;
  const auto anomalies =
      static_cast<std::size_t>(std::llround(cfg.anomaly_frac * static_cast<double>(n)));
  // Stratified split needs three members per class; same-class edges need two.
  if (anomalies < 3 || n - anomalies < 3) {
    throw std::invalid_argument("synth: need at least 3 nodes in each class, got " +
                                std::to_string(anomalies) + " anomalies of " + std::to_string(n));
  }
  const auto target_edges =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.mean_degree / 2.0));
  const double max_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  if (static_cast<double>(target_edges) > 0.5 * max_pairs) {
    throw std::invalid_argument("synth: mean_degree too high for the node count");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t i = 0; i < anomalies; ++i) labels[order[i]] = 1;

  std::vector<std::uint32_t> members[2];
  for (std::uint32_t i = 0; i < n; ++i) members[labels[i]].push_back(i);

  nd::Matrix features(n, cfg.dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = labels[i] ? cfg.shift : 0.0;
    for (std::size_t c = 0; c < cfg.dim; ++c) {
      features(i, c) = static_cast<double>(static_cast<float>(mean + normal(rng)));
    }
  }

  std::set<Edge> edges;
  std::uniform_int_distribution<std::uint32_t> any_node(0, static_cast<std::uint32_t>(n - 1));
  std::bernoulli_distribution same_class(cfg.homophily);
  const std::size_t max_attempts = 100 * target_edges + 1000;
  std::size_t attempts = 0;
  while (edges.size() < target_edges) {
    if (++attempts > max_attempts) {
      throw std::invalid_argument("synth: could not place the requested edges");
    }
    const std::uint32_t u = any_node(rng);
    const std::uint8_t cls = same_class(rng) ? labels[u] : static_cast<std::uint8_t>(1 - labels[u]);
    const auto& pool = members[cls];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::uint32_t v = pool[pick(rng)];
    if (u == v) continue;
    edges.emplace(std::min(u, v), std::max(u, v));
  }
  const std::vector<Edge> edge_vec(edges.begin(), edges.end());
  Graph g = build_graph(edge_vec, std::move(features), std::move(labels));
  Split split = make_split(g, SplitFractions{}, cfg.seed);
  return SynthDataset{std::move(g), std::move(split)};
}

}  // namespace fgc
