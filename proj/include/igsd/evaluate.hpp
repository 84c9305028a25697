#pragma once

#include <string>
#include <vector>

#include "igsd/distill.hpp"

namespace igsd {

struct EmbeddingTable {
  Mat embeddings;            // num_graphs x embedding_dim
  std::vector<int> indices;  // dataset index per row
  double lambda = 0.5;
  std::string checkpoint_id;
};

/// Embed every graph without augmentation or gradients, mixing student and
/// teacher encoder outputs: z~ = lambda * f_theta(G) + (1 - lambda) * f_theta'(G).
EmbeddingTable extract_embeddings(const GraphDataset& ds, const ModelState& state, double lambda,
                                  const std::string& checkpoint_id = "");

/// Text tabular export: '#' header lines (dataset, checkpoint, lambda, dim),
/// then one `index <tab> values...` row per graph.
void write_embeddings(const EmbeddingTable& table, const std::string& path,
                      const std::string& dataset_name);

struct ProbeConfig {
  std::vector<double> c_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  int inner_folds = 3;       // inner CV folds for selecting C
  int max_iterations = 100;  // Newton iterations per fit
  double tolerance = 1e-8;   // gradient norm at convergence
  std::uint64_t seed = 1;
};

struct ProbeResult {
  std::vector<int> predictions;
  double accuracy = 0.0;
  double chosen_c = 0.0;
};

/// L2-regularized multinomial logistic regression on standardized embeddings;
/// C selected by inner cross-validation on the training fold. Deterministic.
ProbeResult linear_probe(const Mat& train_x, const std::vector<int>& train_y, const Mat& test_x,
                         const std::vector<int>& test_y, const ProbeConfig& cfg);

struct EvalResult {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> per_repeat;        // k-fold mean accuracy per repeat
  std::vector<double> per_fold_last;     // fold accuracies of the last repeat
};

/// Extract embeddings once, then run `repeats` rounds of `folds`-fold CV with
/// a fresh fold seed per repeat; labels are used only downstream.
EvalResult evaluate_unsupervised(const GraphDataset& ds, const ModelState& state, int folds,
                                 int repeats, double lambda, const ProbeConfig& probe_cfg);

/// k-fold probe over a precomputed embedding table.
EvalResult evaluate_embeddings(const EmbeddingTable& table, const std::vector<int>& labels,
                               int folds, int repeats, const ProbeConfig& probe_cfg);

}  // namespace igsd
