#pragma once

#include <cstdint>
#include <vector>

#include "igsd/graph.hpp"

namespace igsd {

struct DiffusionConfig {
  double alpha = 0.2;            // PPR teleport probability
  double sparsify_epsilon = 1e-4;
  int truncation_order = 64;     // used only by the series oracle
};

enum class ViewKind { Identity, Diffused, EdgeDropped };

/// An augmented variant of a dataset graph. Node count and features always
/// match the origin graph; only edges (and their weights) change.
struct View {
  Graph graph;
  int origin_index = -1;
  ViewKind kind = ViewKind::Identity;
};

struct AugmentConfig {
  ViewKind strategy = ViewKind::Diffused;
  DiffusionConfig diffusion;
  double edge_drop_prob = 0.2;
};

/// Symmetrically normalized transition matrix T = D^{-1/2} A D^{-1/2} over
/// the weighted adjacency. No self-loops are added; isolated nodes yield
/// zero rows.
Mat transition_matrix(const Graph& g);

/// PPR diffusion in closed form: S = alpha (I - (1-alpha) T)^{-1}, followed by
/// sparsification that zeroes off-diagonal entries below sparsify_epsilon.
View ppr_diffusion(const Graph& g, const DiffusionConfig& cfg, int origin_index = -1);

/// Truncated-series PPR, sum_{k<=order} alpha (1-alpha)^k T^k, without
/// sparsification. Test oracle for the closed form.
Mat ppr_series_oracle(const Graph& g, double alpha, int order);

/// Remove each undirected edge independently with probability drop_prob.
/// Deterministic in `seed`.
View random_edge_drop(const Graph& g, double drop_prob, std::uint64_t seed, int origin_index = -1);

View identity_view(const Graph& g, int origin_index = -1);

/// K augmented views of one graph; stochastic strategies receive distinct
/// per-view seeds derived from `seed`.
std::vector<View> make_views(const Graph& g, int k, const AugmentConfig& cfg, std::uint64_t seed,
                             int origin_index = -1);

}  // namespace igsd
