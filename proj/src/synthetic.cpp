#include "igsd/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "igsd/rng.hpp"

namespace igsd {

GraphDataset make_planted_dataset(const SyntheticConfig& cfg) {
  if (cfg.graph_count < 2) throw ConfigError("make_planted_dataset: need at least 2 graphs");
  if (cfg.nodes_min < 2 || cfg.nodes_max < cfg.nodes_min)
    throw ConfigError("make_planted_dataset: invalid node count range");
  if (cfg.edge_prob < 0.0 || cfg.edge_prob >= 1.0)
    throw ConfigError("make_planted_dataset: edge_prob must lie in [0, 1)");
  if (cfg.clique_size > cfg.nodes_min)
    throw ConfigError("make_planted_dataset: clique_size exceeds smallest graph");

  std::vector<Graph> graphs;
  graphs.reserve(cfg.graph_count);
  for (int i = 0; i < cfg.graph_count; ++i) {
    const int label = i % 2;
    auto rng = make_rng(cfg.seed, {0x5F17Au, static_cast<std::uint64_t>(i)});
    std::uniform_int_distribution<int> size_dist(cfg.nodes_min, cfg.nodes_max);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = size_dist(rng);

    std::vector<Edge> undirected;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (unif(rng) < cfg.edge_prob) undirected.push_back({u, v, 1.0});

    if (label == 1) {
      std::vector<int> nodes(n);
      std::iota(nodes.begin(), nodes.end(), 0);
      std::shuffle(nodes.begin(), nodes.end(), rng);
      for (int a = 0; a < cfg.clique_size; ++a)
        for (int b = a + 1; b < cfg.clique_size; ++b)
          undirected.push_back({nodes[a], nodes[b], 1.0});
    }
    graphs.push_back(make_undirected_graph(n, undirected, Mat(), label));
  }
  assign_degree_features(graphs, cfg.max_degree_cap);

  GraphDataset ds;
  ds.graphs = std::move(graphs);
  ds.num_classes = 2;
  ds.feature_dim = static_cast<int>(ds.graphs.front().node_features.cols());
  ds.name = "SYNTH";
  ds.node_label_count = 0;
  ds.validate();
  return ds;
}

}  // namespace igsd
