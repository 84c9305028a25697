#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "igsd/types.hpp"

namespace igsd {

/// One directed entry of a symmetric edge list. Undirected edges are stored
/// as both (u,v) and (v,u) with equal weights; self-loops appear once.
struct Edge {
  int u = 0;
  int v = 0;
  double weight = 1.0;
};

/// Node-featured, edge-weighted undirected graph with an optional class label.
struct Graph {
  int node_count = 0;
  std::vector<Edge> edges;
  Mat node_features;  // node_count x feature_dim
  std::optional<int> label;

  /// Dense weighted adjacency (symmetric by construction).
  Mat adjacency() const;

  /// Number of undirected edges (self-loops count once).
  int undirected_edge_count() const;

  /// Throws if any structural invariant is violated.
  void validate() const;
};

/// Build a Graph from undirected edge pairs, adding the reverse direction
/// of every (u,v) with u != v. Duplicate entries are collapsed.
Graph make_undirected_graph(int node_count, const std::vector<Edge>& undirected_edges,
                            Mat node_features, std::optional<int> label = std::nullopt);

struct GraphDataset {
  std::vector<Graph> graphs;
  int num_classes = 0;
  int feature_dim = 0;
  std::string name;
  /// Number of distinct node-label values behind the one-hot features;
  /// 0 means features are degree one-hots (no node label file).
  int node_label_count = 0;

  int size() const { return static_cast<int>(graphs.size()); }
  void validate() const;
};

/// A dataset whose labels have been removed. The unsupervised trainer accepts
/// only this type, so representation learning cannot read class labels.
struct UnlabeledDataset {
  GraphDataset data;
};

UnlabeledDataset strip_labels(const GraphDataset& ds);

struct SplitSpec {
  double labeled_fraction = 0.05;
  int fold_count = 10;
  std::uint64_t seed = 1;
};

struct SemiSplit {
  std::vector<int> labeled;
  std::vector<int> unlabeled;
};

struct FoldSplit {
  std::vector<int> train;
  std::vector<int> test;
};

/// Parse a TU-format benchmark directory: `NAME_A.txt` (1-indexed edge list),
/// `NAME_graph_indicator.txt`, `NAME_graph_labels.txt`, and optionally
/// `NAME_node_labels.txt`. Graphs without node labels receive degree one-hot
/// features capped at `max_degree_cap`. Graph labels are remapped to a
/// contiguous [0, num_classes) range.
GraphDataset parse_tu_dataset(const std::string& dir_path, const std::string& name,
                              int max_degree_cap = 64);

/// Write a dataset back to TU format under `dir_path` (created if needed).
void write_tu_dataset(const GraphDataset& ds, const std::string& dir_path);

/// Deterministic stratified labeled/unlabeled split. Every class appears in
/// the labeled set; throws ConfigError when the fraction is too small.
SemiSplit split_semi(const GraphDataset& ds, const SplitSpec& spec);

/// Deterministic k-fold partition; fold sizes differ by at most one.
std::vector<FoldSplit> make_folds(const GraphDataset& ds, int fold_count, std::uint64_t seed);
std::vector<FoldSplit> make_folds(int item_count, int fold_count, std::uint64_t seed);

/// Split `indices` into consecutive batches, optionally shuffled by `seed`.
/// Every index appears exactly once; the last batch may be smaller.
std::vector<std::vector<int>> batch_iter(const std::vector<int>& indices, int batch_size,
                                         std::uint64_t seed, bool shuffle);

/// Assign degree one-hot node features to every graph, with a shared feature
/// dimension of min(max observed degree, cap) + 1 across the whole list.
void assign_degree_features(std::vector<Graph>& graphs, int max_degree_cap);

}  // namespace igsd
