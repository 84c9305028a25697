#include "igsd/augment.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

#include "igsd/rng.hpp"

namespace igsd {

Mat transition_matrix(const Graph& g) {
  if (g.node_count < 1) throw ValueError("transition_matrix: empty graph");
  for (const Edge& e : g.edges)
    if (e.weight < 0.0) throw ValueError("transition_matrix: negative edge weight");
  const Mat a = g.adjacency();
  Vec inv_sqrt_deg = a.rowwise().sum();
  for (int i = 0; i < g.node_count; ++i)
    inv_sqrt_deg(i) = inv_sqrt_deg(i) > 0.0 ? 1.0 / std::sqrt(inv_sqrt_deg(i)) : 0.0;
  return inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
}

View ppr_diffusion(const Graph& g, const DiffusionConfig& cfg, int origin_index) {
  if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0)
    throw ConfigError("ppr_diffusion: alpha must lie in (0, 1)");
  if (!(cfg.sparsify_epsilon >= 0.0) || !std::isfinite(cfg.sparsify_epsilon))
    throw ConfigError("ppr_diffusion: sparsify_epsilon must be finite and >= 0");

  const Mat t = transition_matrix(g);
  const int n = g.node_count;
  const Mat system = Mat::Identity(n, n) - (1.0 - cfg.alpha) * t;
  // For symmetric T with spectral radius <= 1 the system is SPD with smallest
  // eigenvalue >= alpha; guard regardless.
  Eigen::LLT<Mat> llt(system);
  if (llt.info() != Eigen::Success)
    throw NumericalError("ppr_diffusion: I - (1-alpha) T is not positive definite");
  Mat s = cfg.alpha * llt.solve(Mat::Identity(n, n));
  if (!s.allFinite()) throw NumericalError("ppr_diffusion: non-finite diffusion matrix");
  s = ((s + s.transpose()) / 2.0).eval();

  std::vector<Edge> undirected;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double w = s(i, j);
      if (i == j ? w != 0.0 : std::abs(w) >= cfg.sparsify_epsilon)
        undirected.push_back({i, j, w});
    }
  }
  View view;
  view.graph = make_undirected_graph(n, undirected, g.node_features, g.label);
  view.origin_index = origin_index;
  view.kind = ViewKind::Diffused;
  return view;
}

Mat ppr_series_oracle(const Graph& g, double alpha, int order) {
  const Mat t = transition_matrix(g);
  const int n = g.node_count;
  Mat sum = Mat::Zero(n, n);
  Mat t_power = Mat::Identity(n, n);
  double coeff = alpha;
  for (int k = 0; k <= order; ++k) {
    sum += coeff * t_power;
    t_power = (t_power * t).eval();
    coeff *= (1.0 - alpha);
  }
  return sum;
}

View random_edge_drop(const Graph& g, double drop_prob, std::uint64_t seed, int origin_index) {
  if (drop_prob < 0.0 || drop_prob >= 1.0)
    throw ConfigError("random_edge_drop: drop_prob must lie in [0, 1)");
  auto rng = make_rng(seed, {0xD409u});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> kept;
  for (const Edge& e : g.edges) {
    if (e.u > e.v) continue;  // one decision per undirected edge
    if (unif(rng) >= drop_prob) kept.push_back(e);
  }
  View view;
  view.graph = make_undirected_graph(g.node_count, kept, g.node_features, g.label);
  view.origin_index = origin_index;
  view.kind = ViewKind::EdgeDropped;
  return view;
}

View identity_view(const Graph& g, int origin_index) {
  return View{g, origin_index, ViewKind::Identity};
}

std::vector<View> make_views(const Graph& g, int k, const AugmentConfig& cfg, std::uint64_t seed,
                             int origin_index) {
  if (k < 1) throw ConfigError("make_views: K must be >= 1");
  std::vector<View> views;
  views.reserve(k);
  for (int i = 0; i < k; ++i) {
    switch (cfg.strategy) {
      case ViewKind::Identity:
        views.push_back(identity_view(g, origin_index));
        break;
      case ViewKind::Diffused:
        views.push_back(ppr_diffusion(g, cfg.diffusion, origin_index));
        break;
      case ViewKind::EdgeDropped:
        views.push_back(random_edge_drop(g, cfg.edge_drop_prob,
                                         mix_seed(seed, {static_cast<std::uint64_t>(i)}),
                                         origin_index));
        break;
      default:
        throw ConfigError("make_views: unknown augmentation strategy");
    }
  }
  return views;
}

}  // namespace igsd
