#include "igsd/objectives.hpp"

#include <atomic>
#include <iostream>
#include <numeric>

namespace igsd {

BatchLatents make_batch(std::vector<PairLatents> pairs, std::vector<int> labels) {
  if (pairs.empty()) throw ConfigError("make_batch: empty batch");
  if (!labels.empty() && labels.size() != pairs.size())
    throw ConfigError("make_batch: labels must be empty or one per batch item");
  const int b = static_cast<int>(pairs.size());
  const auto d = pairs.front().pred_v.cols();

  std::vector<Tensor> pred_v_rows, pred_vp_rows;
  Mat teach_v(b, d), teach_vp(b, d);
  for (int i = 0; i < b; ++i) {
    pred_v_rows.push_back(pairs[i].pred_v);
    pred_vp_rows.push_back(pairs[i].pred_vp);
    teach_v.row(i) = pairs[i].teach_v.row(0);
    teach_vp.row(i) = pairs[i].teach_vp.row(0);
  }
  Tensor p = stack_rows(pred_v_rows);
  Tensor pp = stack_rows(pred_vp_rows);
  Tensor cross1 = matmul(p, Tensor::constant(teach_vp.transpose()));
  Tensor cross2 = matmul(pp, Tensor::constant(teach_v.transpose()));

  BatchLatents batch;
  batch.pairs = std::move(pairs);
  batch.labels = std::move(labels);
  batch.consistency = add(affine(cross1, -2.0, 2.0), affine(cross2, -2.0, 2.0));
  return batch;
}

Tensor unsup_loss(const BatchLatents& batch, double temperature, bool literal_sign) {
  const int b = batch.size();
  if (b < 2) throw ConfigError("unsup_loss: need at least 2 batch items (one negative)");
  if (!(temperature > 0.0)) throw ConfigError("unsup_loss: temperature must be > 0");
  const double sign = literal_sign ? 1.0 : -1.0;
  Tensor logits = scale(batch.consistency, sign / temperature);
  std::vector<int> diagonal(b);
  std::iota(diagonal.begin(), diagonal.end(), 0);
  Tensor log_probs = pick_per_row(log_softmax_rows(logits), diagonal);
  return scale(sum_all(log_probs), -1.0 / b);
}

Tensor sup_con_loss(const BatchLatents& batch, int k_views) {
  const int b = batch.size();
  if (static_cast<int>(batch.labels.size()) != b)
    throw ConfigError("sup_con_loss: every batch item must be labeled");
  if (k_views < 1) throw ConfigError("sup_con_loss: K must be >= 1");

  std::map<int, int> class_count;
  for (int y : batch.labels) ++class_count[y];
  Mat weights = Mat::Zero(b, b);
  bool any_isolated = false;
  for (int i = 0; i < b; ++i) {
    const int n_yi = class_count[batch.labels[i]];
    if (n_yi < 2) {
      any_isolated = true;
      continue;
    }
    for (int j = 0; j < b; ++j)
      if (j != i && batch.labels[j] == batch.labels[i])
        weights(i, j) = 1.0 / (static_cast<double>(k_views) * n_yi);
  }
  if (any_isolated) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::cerr << "[igsd] warning: sup_con_loss anchor(s) without a same-label positive "
                   "contribute zero (reported once)\n";
  }
  return sum_all(mul(batch.consistency, Tensor::constant(std::move(weights))));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    throw ShapeError("cross_entropy: need one label per logits row");
  Tensor picked = pick_per_row(log_softmax_rows(logits), labels);
  return scale(sum_all(picked), -1.0 / static_cast<double>(labels.size()));
}

SemiLossResult semi_loss(const Tensor& labeled_logits, const std::vector<int>& logit_labels,
                         const BatchLatents* labeled, const BatchLatents* pool,
                         const LossWeights& weights, int k_views, bool literal_sign) {
  if (weights.w < 0.0 || weights.w_prime < 0.0)
    throw ConfigError("semi_loss: weights must be non-negative");
  SemiLossResult result;
  Tensor ce = cross_entropy(labeled_logits, logit_labels);
  result.ce = ce.item();
  result.total = ce;

  if (weights.w > 0.0) {
    if (!pool) throw ConfigError("semi_loss: w > 0 requires pool latents");
    Tensor u = unsup_loss(*pool, weights.temperature, literal_sign);
    result.unsup = u.item();
    result.total = add(result.total, scale(u, weights.w));
  }
  if (weights.w_prime > 0.0) {
    if (!labeled) throw ConfigError("semi_loss: w' > 0 requires labeled latents");
    Tensor s = sup_con_loss(*labeled, k_views);
    result.supcon = s.item();
    result.total = add(result.total, scale(s, weights.w_prime));
  }
  return result;
}

}  // namespace igsd
