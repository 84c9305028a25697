#include "igsd/gnn.hpp"

#include <cmath>

namespace igsd {

namespace {

Mat xavier_uniform(int in_dim, int out_dim, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (in_dim + out_dim));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat w(in_dim, out_dim);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
  return w;
}

/// D^{-1/2} (A + I) D^{-1/2} over the view's weighted adjacency.
Mat gcn_propagation(const Graph& g) {
  Mat a_hat = g.adjacency();
  a_hat += Mat::Identity(g.node_count, g.node_count);
  Vec inv_sqrt_deg = a_hat.rowwise().sum();
  for (int i = 0; i < g.node_count; ++i)
    inv_sqrt_deg(i) = inv_sqrt_deg(i) > 0.0 ? 1.0 / std::sqrt(inv_sqrt_deg(i)) : 0.0;
  return inv_sqrt_deg.asDiagonal() * a_hat * inv_sqrt_deg.asDiagonal();
}

}  // namespace

void add_linear(ParamMap& params, const std::string& prefix, int in_dim, int out_dim,
                std::mt19937_64& rng, bool bias) {
  params.emplace(prefix + ".W", Tensor::leaf(xavier_uniform(in_dim, out_dim, rng), true));
  if (bias) params.emplace(prefix + ".b", Tensor::leaf(Mat::Zero(1, out_dim), true));
}

Tensor linear(const ParamMap& params, const std::string& prefix, const Tensor& x) {
  auto w = params.find(prefix + ".W");
  if (w == params.end()) throw StateError("linear: missing parameter " + prefix + ".W");
  Tensor out = matmul(x, w->second);
  auto b = params.find(prefix + ".b");
  if (b != params.end()) out = add(out, b->second);
  return out;
}

Tensor mlp2(const ParamMap& params, const std::string& prefix, const Tensor& x) {
  return linear(params, prefix + ".l2", relu(linear(params, prefix + ".l1", x)));
}

void add_encoder(ParamMap& params, const std::string& prefix, const EncoderConfig& cfg,
                 int feature_dim, std::mt19937_64& rng) {
  if (cfg.layer_count < 1 || cfg.hidden_dim < 1 || cfg.embedding_dim < 1)
    throw ConfigError("encoder: layer_count and dimensions must be >= 1");
  int in_dim = feature_dim;
  for (int k = 0; k < cfg.layer_count; ++k) {
    const int out_dim = (k + 1 == cfg.layer_count) ? cfg.embedding_dim : cfg.hidden_dim;
    const std::string layer = prefix + ".layer" + std::to_string(k);
    if (cfg.kind == EncoderKind::GCN) {
      add_linear(params, layer, in_dim, out_dim, rng, /*bias=*/false);
    } else {
      add_linear(params, layer + ".l1", in_dim, cfg.hidden_dim, rng);
      add_linear(params, layer + ".l2", cfg.hidden_dim, out_dim, rng);
    }
    in_dim = out_dim;
  }
}

void add_projector(ParamMap& params, const std::string& prefix, const HeadConfig& cfg,
                   int embedding_dim, std::mt19937_64& rng) {
  add_linear(params, prefix + ".l1", embedding_dim, cfg.projector_hidden, rng);
  add_linear(params, prefix + ".l2", cfg.projector_hidden, cfg.projection_dim, rng);
}

void add_predictor(ParamMap& params, const std::string& prefix, const HeadConfig& cfg,
                   std::mt19937_64& rng) {
  add_linear(params, prefix + ".l1", cfg.projection_dim, cfg.predictor_hidden, rng);
  add_linear(params, prefix + ".l2", cfg.predictor_hidden, cfg.projection_dim, rng);
}

void add_classifier(ParamMap& params, const std::string& prefix, int embedding_dim,
                    int num_classes, std::mt19937_64& rng) {
  add_linear(params, prefix, embedding_dim, num_classes, rng);
}

Tensor encode(const View& view, const ParamMap& params, const EncoderConfig& cfg,
              const std::string& prefix) {
  const Graph& g = view.graph;
  auto first = params.find(prefix + (cfg.kind == EncoderKind::GCN ? ".layer0.W" : ".layer0.l1.W"));
  if (first == params.end()) throw StateError("encode: missing encoder parameters under " + prefix);
  if (g.node_features.cols() != first->second.rows())
    throw ShapeError("encode: node feature dim " + std::to_string(g.node_features.cols()) +
                     " does not match encoder input dim " + std::to_string(first->second.rows()));

  Tensor h = Tensor::constant(g.node_features);
  if (cfg.kind == EncoderKind::GCN) {
    Tensor prop = Tensor::constant(gcn_propagation(g));
    for (int k = 0; k < cfg.layer_count; ++k) {
      const std::string layer = prefix + ".layer" + std::to_string(k);
      h = relu(linear(params, layer, matmul(prop, h)));
    }
  } else {
    Mat agg = g.adjacency();
    agg += Mat::Identity(g.node_count, g.node_count);  // (1 + eps) with eps = 0
    Tensor prop = Tensor::constant(std::move(agg));
    for (int k = 0; k < cfg.layer_count; ++k) {
      const std::string layer = prefix + ".layer" + std::to_string(k);
      h = mlp2(params, layer, matmul(prop, h));
    }
  }
  return sum_rows(h);
}

Tensor project(const Tensor& embedding, const ParamMap& params, const std::string& prefix) {
  return mlp2(params, prefix, embedding);
}

Tensor predict(const Tensor& z, const ParamMap& params, const std::string& prefix) {
  return mlp2(params, prefix, z);
}

Tensor classify(const Tensor& embedding, const ParamMap& params, const std::string& prefix) {
  return linear(params, prefix, embedding);
}

}  // namespace igsd
