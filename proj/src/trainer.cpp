#include "igsd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <optional>

#include "igsd/rng.hpp"

namespace igsd {

namespace {

constexpr std::uint64_t kEpochTag = 0xE90Cu;
constexpr std::uint64_t kViewTag = 0x71E35u;
constexpr std::uint64_t kSamplerTag = 0x5A3B1u;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// K (identity, augmented) view pairs for one graph.
std::vector<std::pair<View, View>> view_pairs(const Graph& g, int idx, int k,
                                              const AugmentConfig& aug, std::uint64_t seed) {
  auto augmented = make_views(g, k, aug, seed, idx);
  std::vector<std::pair<View, View>> out;
  out.reserve(augmented.size());
  for (View& vp : augmented) out.emplace_back(identity_view(g, idx), std::move(vp));
  return out;
}

/// Class-balanced labeled sub-batch. When `need_pair` is set the batch is
/// guaranteed to contain two items of one class (SamplerError otherwise).
std::vector<int> balanced_labeled_batch(const std::vector<int>& labeled,
                                        const std::map<int, int>& label_of, int batch_size,
                                        bool need_pair, std::mt19937_64& rng) {
  std::map<int, std::vector<int>> by_class;
  for (int idx : labeled) by_class[label_of.at(idx)].push_back(idx);
  std::vector<int> classes;
  classes.reserve(by_class.size());
  for (auto& [c, pool] : by_class) {
    std::shuffle(pool.begin(), pool.end(), rng);
    classes.push_back(c);
  }
  std::shuffle(classes.begin(), classes.end(), rng);

  const int target = std::min<int>(batch_size, static_cast<int>(labeled.size()));
  std::vector<int> batch;
  std::vector<std::size_t> cursor(classes.size(), 0);
  if (need_pair && target >= 2) {
    bool found = false;
    for (std::size_t ci = 0; ci < classes.size() && !found; ++ci) {
      auto& pool = by_class[classes[ci]];
      if (pool.size() >= 2) {
        batch.push_back(pool[0]);
        batch.push_back(pool[1]);
        cursor[ci] = 2;
        found = true;
      }
    }
    if (!found)
      throw SamplerError(
          "balanced sampler: no class has two labeled graphs, cannot form a same-class pair");
  }
  bool progress = true;
  while (static_cast<int>(batch.size()) < target && progress) {
    progress = false;
    for (std::size_t ci = 0; ci < classes.size() && static_cast<int>(batch.size()) < target; ++ci) {
      auto& pool = by_class[classes[ci]];
      if (cursor[ci] < pool.size()) {
        batch.push_back(pool[cursor[ci]++]);
        progress = true;
      }
    }
  }
  return batch;
}

struct SemiEpochStats {
  double total = 0.0, ce = 0.0, unsup = 0.0, supcon = 0.0;
  int steps = 0;
};

/// One epoch of the semi-supervised objective over the union pool, with a
/// class-balanced labeled sub-batch attached to every step.
SemiEpochStats run_semi_epoch(const GraphDataset& ds, const RunConfig& cfg, ModelState& state,
                              Adam& adam, const std::vector<int>& all_indices, int epoch,
                              const std::vector<int>& labeled_indices,
                              const std::map<int, int>& label_of) {
  SemiEpochStats stats;
  const auto batches = batch_iter(all_indices, cfg.batch_size,
                                  mix_seed(cfg.seed, {kEpochTag, static_cast<std::uint64_t>(epoch)}),
                                  /*shuffle=*/true);
  const auto trainable = state.trainable();
  int step = 0;
  for (const auto& pool_batch : batches) {
    if (pool_batch.size() < 2) continue;  // the InfoNCE term needs a negative
    auto sampler_rng = make_rng(cfg.seed, {kSamplerTag, static_cast<std::uint64_t>(epoch),
                                           static_cast<std::uint64_t>(step)});
    const auto lab_batch = balanced_labeled_batch(labeled_indices, label_of, cfg.batch_size,
                                                  cfg.weights.w_prime > 0.0, sampler_rng);
    if (lab_batch.empty()) throw SamplerError("semi training requires a non-empty labeled set");

    const bool need_pool_latents = cfg.weights.w > 0.0;
    const bool need_labeled_latents = cfg.weights.w_prime > 0.0;

    Tape tape;
    std::optional<BatchLatents> pool_bl;
    if (need_pool_latents) {
      std::vector<PairLatents> pool_pairs;
      pool_pairs.reserve(pool_batch.size());
      for (int idx : pool_batch) {
        auto pairs = view_pairs(ds.graphs[idx], idx, 1, cfg.augment,
                                mix_seed(cfg.seed, {kViewTag, static_cast<std::uint64_t>(epoch),
                                                    static_cast<std::uint64_t>(idx)}));
        pool_pairs.push_back(forward_pair(pairs[0].first, pairs[0].second, state));
      }
      pool_bl = make_batch(std::move(pool_pairs));
    }

    std::optional<BatchLatents> labeled_bl;
    std::vector<Tensor> logit_rows;
    std::vector<int> ce_labels;
    {
      std::vector<PairLatents> lab_pairs;
      std::vector<int> view_labels;
      for (int idx : lab_batch) {
        if (need_labeled_latents) {
          auto pairs = view_pairs(ds.graphs[idx], idx, cfg.k_views, cfg.augment,
                                  mix_seed(cfg.seed, {kViewTag, static_cast<std::uint64_t>(epoch),
                                                      static_cast<std::uint64_t>(idx)}));
          for (auto& pr : pairs) {
            lab_pairs.push_back(forward_pair(pr.first, pr.second, state));
            view_labels.push_back(label_of.at(idx));
          }
        }
        logit_rows.push_back(
            classify(encode(identity_view(ds.graphs[idx], idx), state.student, state.encoder),
                     state.student));
        ce_labels.push_back(label_of.at(idx));
      }
      if (need_labeled_latents) labeled_bl = make_batch(std::move(lab_pairs), std::move(view_labels));
    }

    auto sem = semi_loss(stack_rows(logit_rows), ce_labels,
                         labeled_bl ? &*labeled_bl : nullptr, pool_bl ? &*pool_bl : nullptr,
                         cfg.weights, cfg.k_views, cfg.unsup_literal_sign);
    backward(sem.total);
    for (Tensor p : trainable) p.ensure_grad();
    adam.step();
    ++state.student_steps;
    ema_update(state);

    stats.total += sem.total.item();
    stats.ce += sem.ce;
    stats.unsup += sem.unsup;
    stats.supcon += sem.supcon;
    ++stats.steps;
    ++step;
  }
  if (stats.steps > 0) {
    stats.total /= stats.steps;
    stats.ce /= stats.steps;
    stats.unsup /= stats.steps;
    stats.supcon /= stats.steps;
  }
  return stats;
}

std::map<int, int> original_label_map(const GraphDataset& ds, const std::vector<int>& labeled) {
  std::map<int, int> label_of;
  for (int idx : labeled) {
    if (!ds.graphs[idx].label)
      throw ConfigError("semi training: labeled split contains an unlabeled graph");
    label_of[idx] = *ds.graphs[idx].label;
  }
  return label_of;
}

}  // namespace

void RunConfig::validate(int num_classes) const {
  if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
  if (batch_size < 2) throw ConfigError("config: batch_size must be >= 2 for contrastive training");
  if (learning_rate < 0.0) throw ConfigError("config: learning_rate must be >= 0");
  if (ema_decay < 0.0 || ema_decay > 1.0) throw ConfigError("config: tau must lie in [0, 1]");
  if (mixup_lambda < 0.0 || mixup_lambda > 1.0) throw ConfigError("config: lambda must lie in [0, 1]");
  if (weights.w < 0.0 || weights.w_prime < 0.0) throw ConfigError("config: loss weights must be >= 0");
  if (!(weights.temperature > 0.0)) throw ConfigError("config: temperature must be > 0");
  if (k_views < 1) throw ConfigError("config: k-views must be >= 1");
  if (self_train.enabled) {
    if (self_train.start_epoch < 0 || self_train.start_epoch > epochs)
      throw ConfigError("config: self-train start epoch must lie in [0, epochs]");
    if (self_train.iterations < 0) throw ConfigError("config: self-train iterations must be >= 0");
    if (num_classes > 0 &&
        !(self_train.threshold > 1.0 / num_classes && self_train.threshold <= 1.0))
      throw ConfigError("config: pseudo-label threshold must lie in (1/num_classes, 1]");
  }
}

TrainResult train_unsupervised(const UnlabeledDataset& uds, const RunConfig& cfg,
                               const EpochCallback& on_epoch) {
  const GraphDataset& ds = uds.data;
  if (ds.size() < 2) throw ConfigError("train_unsupervised: need at least 2 graphs");
  cfg.validate(0);

  TrainResult result;
  result.state = ModelState::init(cfg.encoder, cfg.heads, ds.feature_dim, /*num_classes=*/0,
                                  cfg.ema_decay, cfg.seed);
  ModelState& state = result.state;
  Adam adam(state.trainable(), {cfg.learning_rate});
  const auto trainable = state.trainable();

  std::vector<int> indices(ds.size());
  std::iota(indices.begin(), indices.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    const auto batches = batch_iter(
        indices, cfg.batch_size, mix_seed(cfg.seed, {kEpochTag, static_cast<std::uint64_t>(epoch)}),
        /*shuffle=*/true);
    double epoch_loss = 0.0;
    int steps = 0;
    for (const auto& batch : batches) {
      if (batch.size() < 2) continue;  // cannot form a negative pair
      Tape tape;
      std::vector<PairLatents> pairs;
      pairs.reserve(batch.size());
      for (int idx : batch) {
        auto vp = view_pairs(ds.graphs[idx], idx, 1, cfg.augment,
                             mix_seed(cfg.seed, {kViewTag, static_cast<std::uint64_t>(epoch),
                                                 static_cast<std::uint64_t>(idx)}));
        pairs.push_back(forward_pair(vp[0].first, vp[0].second, state));
      }
      auto bl = make_batch(std::move(pairs));
      Tensor loss = unsup_loss(bl, cfg.weights.temperature, cfg.unsup_literal_sign);
      backward(loss);
      for (Tensor p : trainable) p.ensure_grad();
      adam.step();
      ++state.student_steps;
      ema_update(state);
      epoch_loss += loss.item();
      ++steps;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.loss_total = steps > 0 ? epoch_loss / steps : 0.0;
    record.loss_unsup = record.loss_total;
    record.wall_seconds = seconds_since(t0);
    result.trace.push_back(record);
    if (on_epoch) on_epoch(record, state);
  }
  return result;
}

double classifier_accuracy(const ModelState& state, const GraphDataset& ds,
                           const std::vector<int>& indices) {
  if (indices.empty()) throw ConfigError("classifier_accuracy: empty index set");
  NoGrad guard;
  int correct = 0;
  for (int idx : indices) {
    if (!ds.graphs[idx].label)
      throw StateError("classifier_accuracy: graph " + std::to_string(idx) + " has no label");
    Tensor logits =
        classify(encode(identity_view(ds.graphs[idx], idx), state.student, state.encoder),
                 state.student);
    Eigen::Index arg = 0;
    logits.value().row(0).maxCoeff(&arg);
    if (static_cast<int>(arg) == *ds.graphs[idx].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

PseudoLabelSet self_train_round(const ModelState& state, const GraphDataset& ds,
                                const std::vector<int>& pool, double threshold, int round,
                                const PseudoLabelSet& existing) {
  PseudoLabelSet out = existing;
  NoGrad guard;
  for (int idx : pool) {
    Tensor logits =
        classify(encode(identity_view(ds.graphs[idx], idx), state.student, state.encoder),
                 state.student);
    Tensor probs = softmax_rows(logits);
    // argmax with ties resolved to the lowest class index
    Eigen::Index arg = 0;
    const double confidence = probs.value().row(0).maxCoeff(&arg);
    if (confidence < threshold) continue;
    auto it = out.find(idx);
    if (it == out.end())
      out.emplace(idx, PseudoLabel{static_cast<int>(arg), confidence, round});
    else if (confidence > it->second.confidence)
      it->second = PseudoLabel{static_cast<int>(arg), confidence, round};
  }
  return out;
}

TrainResult train_semi(const GraphDataset& ds, const SemiSplit& split, const RunConfig& cfg,
                       const EpochCallback& on_epoch, const std::vector<int>* eval_indices) {
  if (cfg.self_train.enabled) return run_self_training(ds, split, cfg, on_epoch, eval_indices);
  cfg.validate(ds.num_classes);
  if (split.labeled.empty()) throw ConfigError("train_semi: labeled split is empty");

  TrainResult result;
  result.state = ModelState::init(cfg.encoder, cfg.heads, ds.feature_dim, ds.num_classes,
                                  cfg.ema_decay, cfg.seed);
  ModelState& state = result.state;
  Adam adam(state.trainable(), {cfg.learning_rate});

  std::vector<int> all_indices = split.labeled;
  all_indices.insert(all_indices.end(), split.unlabeled.begin(), split.unlabeled.end());
  std::sort(all_indices.begin(), all_indices.end());
  const auto label_of = original_label_map(ds, split.labeled);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    const auto stats = run_semi_epoch(ds, cfg, state, adam, all_indices, epoch, split.labeled, label_of);
    EpochRecord record;
    record.epoch = epoch;
    record.loss_total = stats.total;
    record.loss_ce = stats.ce;
    record.loss_unsup = stats.unsup;
    record.loss_supcon = stats.supcon;
    if (eval_indices) record.eval_accuracy = classifier_accuracy(state, ds, *eval_indices);
    record.wall_seconds = seconds_since(t0);
    result.trace.push_back(record);
    if (on_epoch) on_epoch(record, state);
  }
  return result;
}

TrainResult run_self_training(const GraphDataset& ds, const SemiSplit& split, const RunConfig& cfg,
                              const EpochCallback& on_epoch, const std::vector<int>* eval_indices) {
  if (!cfg.self_train.enabled) throw ConfigError("run_self_training: self_train.enabled is false");
  cfg.validate(ds.num_classes);
  if (split.labeled.empty()) throw ConfigError("run_self_training: labeled split is empty");

  TrainResult result;
  result.state = ModelState::init(cfg.encoder, cfg.heads, ds.feature_dim, ds.num_classes,
                                  cfg.ema_decay, cfg.seed);
  ModelState& state = result.state;
  Adam adam(state.trainable(), {cfg.learning_rate});

  std::vector<int> all_indices = split.labeled;
  all_indices.insert(all_indices.end(), split.unlabeled.begin(), split.unlabeled.end());
  std::sort(all_indices.begin(), all_indices.end());
  const auto original_labels = original_label_map(ds, split.labeled);

  auto emit = [&](int epoch, const SemiEpochStats& stats, int pseudo_count, double pseudo_accuracy,
                  Clock::time_point t0) {
    EpochRecord record;
    record.epoch = epoch;
    record.loss_total = stats.total;
    record.loss_ce = stats.ce;
    record.loss_unsup = stats.unsup;
    record.loss_supcon = stats.supcon;
    record.pseudo_count = pseudo_count;
    record.pseudo_accuracy = pseudo_accuracy;
    if (eval_indices) record.eval_accuracy = classifier_accuracy(state, ds, *eval_indices);
    record.wall_seconds = seconds_since(t0);
    result.trace.push_back(record);
    if (on_epoch) on_epoch(record, state);
  };

  // Warm-up epochs on the original labeled set.
  int epoch = 0;
  for (; epoch < cfg.self_train.start_epoch; ++epoch) {
    const auto t0 = Clock::now();
    const auto stats = run_semi_epoch(ds, cfg, state, adam, all_indices, epoch, split.labeled,
                                      original_labels);
    emit(epoch, stats, 0, -1.0, t0);
  }

  // Alternate pseudo-labeling with one training epoch per round.
  for (int round = 0; round < cfg.self_train.iterations; ++round, ++epoch) {
    const auto t0 = Clock::now();
    result.pseudo_labels = self_train_round(state, ds, split.unlabeled, cfg.self_train.threshold,
                                            round, result.pseudo_labels);
    std::vector<int> labeled_indices = split.labeled;
    std::map<int, int> label_of = original_labels;
    int pseudo_correct = 0, pseudo_known = 0;
    for (const auto& [idx, pl] : result.pseudo_labels) {
      labeled_indices.push_back(idx);
      label_of[idx] = pl.label;
      if (ds.graphs[idx].label) {
        ++pseudo_known;
        if (*ds.graphs[idx].label == pl.label) ++pseudo_correct;
      }
    }
    std::sort(labeled_indices.begin(), labeled_indices.end());
    const double pseudo_accuracy =
        pseudo_known > 0 ? static_cast<double>(pseudo_correct) / pseudo_known : -1.0;
    const auto stats = run_semi_epoch(ds, cfg, state, adam, all_indices, epoch, labeled_indices,
                                      label_of);
    emit(epoch, stats, static_cast<int>(result.pseudo_labels.size()), pseudo_accuracy, t0);
  }
  return result;
}

}  // namespace igsd
