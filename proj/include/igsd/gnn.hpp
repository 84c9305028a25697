#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "igsd/augment.hpp"
#include "igsd/tensor.hpp"

namespace igsd {

enum class EncoderKind { GCN, GIN };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::GCN;
  int layer_count = 2;
  int hidden_dim = 64;
  int embedding_dim = 64;
};

struct HeadConfig {
  int projector_hidden = 1024;
  int projection_dim = 256;
  int predictor_hidden = 256;  // matches the projection size
};

/// Xavier-uniform weight "<prefix>.W" [in x out] plus zero bias "<prefix>.b".
void add_linear(ParamMap& params, const std::string& prefix, int in_dim, int out_dim,
                std::mt19937_64& rng, bool bias = true);

Tensor linear(const ParamMap& params, const std::string& prefix, const Tensor& x);
/// Linear -> ReLU -> Linear under "<prefix>.l1" / "<prefix>.l2".
Tensor mlp2(const ParamMap& params, const std::string& prefix, const Tensor& x);

/// Encoder parameters under "<prefix>.layer<k>...".
void add_encoder(ParamMap& params, const std::string& prefix, const EncoderConfig& cfg,
                 int feature_dim, std::mt19937_64& rng);
void add_projector(ParamMap& params, const std::string& prefix, const HeadConfig& cfg,
                   int embedding_dim, std::mt19937_64& rng);
void add_predictor(ParamMap& params, const std::string& prefix, const HeadConfig& cfg,
                   std::mt19937_64& rng);
void add_classifier(ParamMap& params, const std::string& prefix, int embedding_dim,
                    int num_classes, std::mt19937_64& rng);

/// Graph-level embedding [1 x embedding_dim]: message passing over the view's
/// weighted adjacency followed by sum readout.
/// GCN layer: H <- ReLU(D^{-1/2} (A + I) D^{-1/2} H W).
/// GIN layer: H <- MLP((A + I) H)  (epsilon = 0; weighted neighbor sums).
Tensor encode(const View& view, const ParamMap& params, const EncoderConfig& cfg,
              const std::string& prefix = "enc");

/// Two-layer MLP projection head.
Tensor project(const Tensor& embedding, const ParamMap& params, const std::string& prefix = "proj");

/// Two-layer MLP predictor; exists only in the student network.
Tensor predict(const Tensor& z, const ParamMap& params, const std::string& prefix = "pred");

/// Linear classification head over graph embeddings.
Tensor classify(const Tensor& embedding, const ParamMap& params, const std::string& prefix = "cls");

}  // namespace igsd
