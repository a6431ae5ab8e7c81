#pragma once

#include <cstddef>
#include <cstdint>

#include "fgc/graph.hpp"

namespace fgc {

/// Planted-anomaly benchmark graph.
///
/// Exactly round(anomaly_frac · n) nodes are anomalous. Features are unit
/// Gaussians, shifted by `shift` in every dimension for anomalies, and rounded
/// to f32 so they survive a file round trip. Each edge starts at a uniform node
/// and ends at a node of the same class with probability `homophily`, else of
/// the other class, until n · mean_degree / 2 distinct edges exist.
struct SynthConfig {
  std::size_t nodes = 2000;
  std::size_t dim = 16;
  double anomaly_frac = 0.1;
  double homophily = 0.8;
  double mean_degree = 10.0;
  double shift = 2.0;
  std::uint64_t seed = 0;
};

struct SynthDataset {
  Graph graph;
  /// Stratified 0.4 / 0.2 / 0.4 split seeded by the same seed.
  Split split;
};

/// Throws std::invalid_argument for infeasible parameters.
SynthDataset synth_planted_anomaly(const SynthConfig& cfg);

}  // namespace fgc
