#pragma once

#include <functional>
#include <map>

#include "igsd/metrics.hpp"
#include "igsd/objectives.hpp"
#include "igsd/optim.hpp"

namespace igsd {

struct SelfTrainConfig {
  bool enabled = false;
  int start_epoch = 30;     // warm-up epochs before the first pseudo-label round
  int iterations = 20;      // rounds of (pseudo-label, train one epoch)
  double threshold = 0.95;  // softmax confidence required for a pseudo-label
};

struct RunConfig {
  EncoderConfig encoder;
  HeadConfig heads;
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double ema_decay = 0.99;
  double mixup_lambda = 0.5;
  LossWeights weights;             // w, w', temperature
  bool unsup_literal_sign = false; // comparison flag for the InfoNCE logit sign
  int k_views = 1;
  AugmentConfig augment;
  double labeled_fraction = 0.05;
  SelfTrainConfig self_train;
  int checkpoint_every = 0;  // epochs between CLI checkpoints; 0 = final only
  std::uint64_t seed = 1;

  void validate(int num_classes) const;
};

struct PseudoLabel {
  int label = 0;
  double confidence = 0.0;
  int round = 0;  // self-training round that (last) assigned it
};

/// Pseudo-labels keyed by dataset index; only ever holds indices from the
/// originally-unlabeled pool, each with confidence >= the threshold in force.
using PseudoLabelSet = std::map<int, PseudoLabel>;

struct TrainResult {
  ModelState state;
  std::vector<EpochRecord> trace;
  PseudoLabelSet pseudo_labels;
};

using EpochCallback = std::function<void(const EpochRecord&, const ModelState&)>;

/// Unsupervised pretraining: per batch, build views, forward both networks,
/// minimize the InfoNCE-over-consistency loss, step Adam, then EMA-update the
/// teacher. Deterministic given cfg.seed.
TrainResult train_unsupervised(const UnlabeledDataset& ds, const RunConfig& cfg,
                               const EpochCallback& on_epoch = {});

/// Semi-supervised training of CE + w * unsup + w' * supcon. When
/// cfg.self_train.enabled, delegates to run_self_training after the warm-up.
/// `eval_indices` (optional) selects graphs whose true labels are used for a
/// per-epoch held-out accuracy, never for training.
TrainResult train_semi(const GraphDataset& ds, const SemiSplit& split, const RunConfig& cfg,
                       const EpochCallback& on_epoch = {},
                       const std::vector<int>* eval_indices = nullptr);

/// One pseudo-labeling pass over `pool` with the trained classifier head.
/// Ties at equal max probability resolve to the lowest class index. Existing
/// pseudo-labels are replaced only when confidence grows.
PseudoLabelSet self_train_round(const ModelState& state, const GraphDataset& ds,
                                const std::vector<int>& pool, double threshold, int round = 0,
                                const PseudoLabelSet& existing = {});

/// Warm-up train_semi epochs, then alternate pseudo-labeling rounds with one
/// training epoch each. The labeled set grows monotonically; pseudo-labeled
/// graphs join both the CE and the supervised contrastive term.
TrainResult run_self_training(const GraphDataset& ds, const SemiSplit& split, const RunConfig& cfg,
                              const EpochCallback& on_epoch = {},
                              const std::vector<int>* eval_indices = nullptr);

/// Classifier accuracy over `indices` using the student encoder on identity
/// views (no augmentation, no gradients).
double classifier_accuracy(const ModelState& state, const GraphDataset& ds,
                           const std::vector<int>& indices);

}  // namespace igsd
