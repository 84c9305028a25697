#pragma once

#include <cstdint>

#include "igsd/graph.hpp"

namespace igsd {

/// Planted two-class benchmark: class 0 graphs are Erdős–Rényi, class 1
/// graphs additionally carry a planted clique. Node features are degree
/// one-hots shared across the dataset.
struct SyntheticConfig {
  int graph_count = 200;
  int nodes_min = 15;
  int nodes_max = 25;
  double edge_prob = 0.15;
  int clique_size = 7;
  int max_degree_cap = 64;
  std::uint64_t seed = 1;
};

GraphDataset make_planted_dataset(const SyntheticConfig& cfg);

}  // namespace igsd
