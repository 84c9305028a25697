#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "igsd/augment.hpp"
#include "igsd/rng.hpp"

using namespace igsd;

namespace {

Graph path_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return make_undirected_graph(n, edges, Mat::Ones(n, 1));
}

Graph triangle() {
  return make_undirected_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}, Mat::Ones(3, 1));
}

Graph random_graph(int n, double p, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (unif(rng) < p) edges.push_back({u, v, 1.0});
  return make_undirected_graph(n, edges, Mat::Ones(n, 1));
}

Graph cycle_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return make_undirected_graph(n, edges, Mat::Ones(n, 1));
}

}  // namespace

TEST_CASE("transition_matrix") {
  SUBCASE("single node, no edges -> [[0]]") {
    Graph g = make_undirected_graph(1, {}, Mat::Ones(1, 1));
    const Mat t = transition_matrix(g);
    CHECK(t.rows() == 1);
    CHECK(t(0, 0) == 0.0);
  }
  SUBCASE("2-node single edge -> [[0,1],[1,0]]") {
    const Mat t = transition_matrix(path_graph(2));
    CHECK(t(0, 0) == doctest::Approx(0.0));
    CHECK(t(0, 1) == doctest::Approx(1.0));
    CHECK(t(1, 0) == doctest::Approx(1.0));
  }
  SUBCASE("triangle: off-diagonals 0.5 (D = 2I)") {
    const Mat t = transition_matrix(triangle());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(t(i, j) == doctest::Approx(i == j ? 0.0 : 0.5).epsilon(1e-12));
  }
  SUBCASE("negative edge weight rejected") {
    Graph g = make_undirected_graph(2, {{0, 1, -1.0}}, Mat::Ones(2, 1));
    CHECK_THROWS_AS(transition_matrix(g), ValueError);
  }
}

TEST_CASE("ppr_diffusion closed form") {
  DiffusionConfig cfg;
  cfg.sparsify_epsilon = 0.0;

  SUBCASE("self-loop single node: S = [[1]] for any alpha") {
    Graph g = make_undirected_graph(1, {{0, 0, 1.0}}, Mat::Ones(1, 1));
    for (double alpha : {0.05, 0.2, 0.9}) {
      cfg.alpha = alpha;
      const View v = ppr_diffusion(g, cfg);
      REQUIRE(v.graph.edges.size() == 1);
      CHECK(v.graph.edges[0].weight == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("2-node graph at alpha 0.2 matches hand-derived inverse") {
    cfg.alpha = 0.2;
    const View v = ppr_diffusion(path_graph(2), cfg);
    const Mat s = v.graph.adjacency();
    CHECK(s(0, 0) == doctest::Approx(0.5556).epsilon(1e-3));
    CHECK(s(0, 1) == doctest::Approx(0.4444).epsilon(1e-3));
    CHECK(s(1, 0) == doctest::Approx(0.4444).epsilon(1e-3));
    CHECK(s(1, 1) == doctest::Approx(0.5556).epsilon(1e-3));
  }
  SUBCASE("closed form agrees with the truncated series oracle") {
    // Order-64 truncation leaves a (1-alpha)^65 tail, so the 1e-8 bound is
    // meaningful for alpha >= 0.25; alpha = 0.2 bottoms out near 5e-7.
    for (double alpha : {0.3, 0.5}) {
      cfg.alpha = alpha;
      for (int n : {2, 5, 10}) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
          const Graph g = random_graph(n, 0.5, seed);
          const View v = ppr_diffusion(g, cfg);
          const Mat series = ppr_series_oracle(g, cfg.alpha, 64);
          CHECK((v.graph.adjacency() - series).cwiseAbs().maxCoeff() < 1e-8);
        }
      }
    }
    cfg.alpha = 0.2;
    const Graph g = random_graph(8, 0.5, 4);
    const Mat series = ppr_series_oracle(g, cfg.alpha, 64);
    CHECK((ppr_diffusion(g, cfg).graph.adjacency() - series).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("invalid alpha rejected") {
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(ppr_diffusion(path_graph(2), cfg), ConfigError);
  }
}

TEST_CASE("ppr_diffusion invariants") {
  DiffusionConfig cfg;
  cfg.alpha = 0.2;
  cfg.sparsify_epsilon = 0.0;

  SUBCASE("rows sum to 1 on regular graphs (doubly stochastic T)") {
    for (int n : {3, 6, 9}) {
      const View v = ppr_diffusion(cycle_graph(n), cfg);
      const Vec sums = v.graph.adjacency().rowwise().sum();
      for (int i = 0; i < n; ++i) CHECK(sums(i) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("S symmetric") {
    const Graph g = random_graph(8, 0.4, 5);
    const View v = ppr_diffusion(g, cfg);
    const Mat s = v.graph.adjacency();
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("sparsification is monotone in epsilon") {
    const Graph g = random_graph(10, 0.3, 7);
    int prev_edges = -1;
    bool first = true;
    for (double eps : {0.0, 1e-4, 1e-2, 1e-1}) {
      DiffusionConfig c{0.2, eps, 64};
      const View v = ppr_diffusion(g, c);
      const int count = v.graph.undirected_edge_count();
      if (!first) CHECK(count <= prev_edges);
      prev_edges = count;
      first = false;
    }
  }
  SUBCASE("views preserve node_count and features") {
    Graph g = random_graph(6, 0.5, 9);
    g.node_features = Mat::Random(6, 4);
    const View v = ppr_diffusion(g, cfg);
    CHECK(v.graph.node_count == 6);
    CHECK(v.graph.node_features == g.node_features);
    CHECK(v.kind == ViewKind::Diffused);
  }
}

TEST_CASE("random_edge_drop") {
  SUBCASE("drop_prob 0 keeps every edge") {
    const Graph g = random_graph(10, 0.5, 1);
    const View v = random_edge_drop(g, 0.0, 123);
    CHECK(v.graph.undirected_edge_count() == g.undirected_edge_count());
    CHECK(v.kind == ViewKind::EdgeDropped);
  }
  SUBCASE("same seed -> identical views") {
    const Graph g = random_graph(10, 0.5, 2);
    const View a = random_edge_drop(g, 0.3, 99);
    const View b = random_edge_drop(g, 0.3, 99);
    REQUIRE(a.graph.edges.size() == b.graph.edges.size());
    for (std::size_t i = 0; i < a.graph.edges.size(); ++i) {
      CHECK(a.graph.edges[i].u == b.graph.edges[i].u);
      CHECK(a.graph.edges[i].v == b.graph.edges[i].v);
    }
  }
  SUBCASE("surviving edges follow the binomial count (Monte Carlo oracle)") {
    // 100-edge graph, p = 0.3: mean survivors 70, sigma = sqrt(100 * .3 * .7).
    std::vector<Edge> edges;
    int u = 0, v = 1;
    for (int e = 0; e < 100; ++e) {
      edges.push_back({u, v, 1.0});
      if (++v == 51) v = ++u + 1;  // simple distinct pairs over 51 nodes
    }
    const Graph g = make_undirected_graph(51, edges, Mat::Ones(51, 1));
    REQUIRE(g.undirected_edge_count() == 100);
    const double p = 0.3;
    double total = 0.0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t)
      total += random_edge_drop(g, p, 1000 + t).graph.undirected_edge_count();
    const double mean = total / trials;
    const double sigma_of_mean = std::sqrt(100 * p * (1 - p)) / std::sqrt(trials);
    CHECK(std::abs(mean - 70.0) <= 3 * sigma_of_mean + 1e-9);
  }
  SUBCASE("drop_prob outside [0,1) rejected") {
    const Graph g = path_graph(3);
    CHECK_THROWS_AS(random_edge_drop(g, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(random_edge_drop(g, -0.1, 1), ConfigError);
  }
}

TEST_CASE("make_views") {
  const Graph g = random_graph(8, 0.4, 3);
  AugmentConfig cfg;

  SUBCASE("K=1 diffused delegates to ppr_diffusion") {
    cfg.strategy = ViewKind::Diffused;
    const auto views = make_views(g, 1, cfg, 1, 7);
    REQUIRE(views.size() == 1);
    CHECK(views[0].kind == ViewKind::Diffused);
    CHECK(views[0].origin_index == 7);
    const View direct = ppr_diffusion(g, cfg.diffusion, 7);
    CHECK(views[0].graph.adjacency() == direct.graph.adjacency());
  }
  SUBCASE("K=2 stochastic views differ (distinct seeds)") {
    cfg.strategy = ViewKind::EdgeDropped;
    cfg.edge_drop_prob = 0.5;
    const auto views = make_views(g, 2, cfg, 1);
    REQUIRE(views.size() == 2);
    CHECK(views[0].graph.adjacency() != views[1].graph.adjacency());
  }
  SUBCASE("identity strategy wraps the original graph") {
    cfg.strategy = ViewKind::Identity;
    const auto views = make_views(g, 1, cfg, 1);
    CHECK(views[0].kind == ViewKind::Identity);
    CHECK(views[0].graph.adjacency() == g.adjacency());
  }
  SUBCASE("K < 1 rejected") {
    CHECK_THROWS_AS(make_views(g, 0, cfg, 1), ConfigError);
  }
}
