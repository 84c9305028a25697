#pragma once

#include <vector>

#include "igsd/distill.hpp"

namespace igsd {

/// Latents for a batch of B graphs plus the pairwise consistency matrix
/// L[i][j] = L_con(G_i, G_j). The diagonal holds positive-pair losses.
struct BatchLatents {
  std::vector<PairLatents> pairs;
  std::vector<int> labels;  // empty, or one class index per batch item
  Tensor consistency;       // [B x B], on the tape through the student latents

  int size() const { return static_cast<int>(pairs.size()); }
};

/// Assemble a batch and its consistency matrix. For unit-norm latents
/// ||a - b||^2 = 2 - 2 a.b, so L is built from two stacked inner products
/// and stays differentiable through the student predictions.
BatchLatents make_batch(std::vector<PairLatents> pairs, std::vector<int> labels = {});

struct LossWeights {
  double w = 1.0;        // unsupervised term
  double w_prime = 0.0;  // supervised contrastive term
  double temperature = 1.0;
};

/// InfoNCE over consistency losses: per anchor i the logits are
/// s_ij = -L[i][j] / temperature and the positive is the diagonal.
/// `literal_sign` flips to s_ij = +L[i][j] / temperature, the literal
/// reading, retained for comparison runs.
Tensor unsup_loss(const BatchLatents& batch, double temperature, bool literal_sign = false);

/// Supervised contrastive loss: sum_i 1/(K N_yi) sum_{j != i, yj = yi} L[i][j]
/// where N_yi counts batch items sharing anchor i's label (anchor included).
/// Anchors without a positive contribute zero (with a logged warning).
Tensor sup_con_loss(const BatchLatents& batch, int k_views);

struct SemiLossResult {
  Tensor total;
  double ce = 0.0;      // unweighted component values, for logging
  double unsup = 0.0;
  double supcon = 0.0;
};

/// Combined objective: CE(labeled) + w * unsup(pool) + w' * supcon(labeled).
/// `logit_labels` pairs with `labeled_logits` rows (one per labeled graph,
/// while the labeled batch may hold K view items per graph). A zero-weighted
/// term is skipped entirely -- its latents need not exist and its breakdown
/// entry is 0 -- so w = w' = 0 reduces exactly to plain cross-entropy.
SemiLossResult semi_loss(const Tensor& labeled_logits, const std::vector<int>& logit_labels,
                         const BatchLatents* labeled, const BatchLatents* pool,
                         const LossWeights& weights, int k_views, bool literal_sign = false);

/// Mean cross-entropy of logits [B x C] against integer labels.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace igsd
