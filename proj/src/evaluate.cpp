#include "igsd/evaluate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>

#include "igsd/graph.hpp"
#include "igsd/rng.hpp"

namespace igsd {

namespace {

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_std;

  static Standardizer fit(const Mat& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    Eigen::RowVectorXd var =
        (x.rowwise() - s.mean).array().square().colwise().sum() / std::max<double>(1.0, x.rows());
    s.inv_std = var.array().sqrt().max(1e-12).inverse();
    return s;
  }
  Mat apply(const Mat& x) const {
    return (x.rowwise() - mean).array().rowwise() * inv_std.array();
  }
};

/// Multinomial logistic regression with L2 on the weights (lambda = 1/(C n))
/// and a tiny ridge on the bias to pin softmax's null direction. Newton
/// iterations with Armijo backtracking; deterministic.
struct Logistic {
  Mat theta;  // (d+1) x C, last row is the bias
  int num_classes = 0;

  static double objective(const Mat& xa, const std::vector<int>& y, const Mat& theta,
                          double lambda, double bias_ridge) {
    const Eigen::Index n = xa.rows();
    Mat logits = xa * theta;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = logits.row(i).maxCoeff();
      const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
      nll += lse - logits(i, y[i]);
    }
    const auto d = theta.rows() - 1;
    return nll / static_cast<double>(n) + 0.5 * lambda * theta.topRows(d).squaredNorm() +
           0.5 * bias_ridge * theta.row(d).squaredNorm();
  }

  static Logistic fit(const Mat& x, const std::vector<int>& y, int num_classes, double c_reg,
                      int max_iterations, double tolerance) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const Eigen::Index da = d + 1;
    const double lambda = 1.0 / (c_reg * static_cast<double>(n));
    const double bias_ridge = 1e-9;

    Mat xa(n, da);
    xa << x, Mat::Ones(n, 1);
    Mat theta = Mat::Zero(da, num_classes);

    for (int iter = 0; iter < max_iterations; ++iter) {
      Mat logits = xa * theta;
      Mat probs(n, num_classes);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        probs.row(i) = (logits.row(i).array() - m).exp();
        probs.row(i) /= probs.row(i).sum();
      }
      Mat resid = probs;
      for (Eigen::Index i = 0; i < n; ++i) resid(i, y[i]) -= 1.0;
      Mat grad = xa.transpose() * resid / static_cast<double>(n);
      grad.topRows(d) += lambda * theta.topRows(d);
      grad.row(d) += bias_ridge * theta.row(d);
      const double gnorm = grad.norm();
      if (gnorm <= tolerance) break;

      // Dense Hessian over the stacked parameter vector (class-major blocks).
      const Eigen::Index dim = da * num_classes;
      Mat hess = Mat::Zero(dim, dim);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Mat outer = xa.row(i).transpose() * xa.row(i);
        for (int a = 0; a < num_classes; ++a) {
          for (int b = 0; b < num_classes; ++b) {
            const double w = ((a == b ? probs(i, a) : 0.0) - probs(i, a) * probs(i, b));
            if (w != 0.0) hess.block(a * da, b * da, da, da) += w * outer;
          }
        }
      }
      hess /= static_cast<double>(n);
      for (int a = 0; a < num_classes; ++a) {
        hess.block(a * da, a * da, d, d).diagonal().array() += lambda;
        hess(a * da + d, a * da + d) += bias_ridge;
      }

      Eigen::VectorXd gvec(dim);
      for (int a = 0; a < num_classes; ++a) gvec.segment(a * da, da) = grad.col(a);
      Eigen::LDLT<Mat> ldlt(hess);
      Eigen::VectorXd delta = -ldlt.solve(gvec);
      if (!delta.allFinite()) throw NumericalError("linear_probe: Newton step failed");

      Mat dir(da, num_classes);
      for (int a = 0; a < num_classes; ++a) dir.col(a) = delta.segment(a * da, da);
      const double slope = (gvec.transpose() * delta)(0, 0);
      const double f0 = objective(xa, y, theta, lambda, bias_ridge);
      double t = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        if (objective(xa, y, theta + t * dir, lambda, bias_ridge) <= f0 + 1e-4 * t * slope) break;
        t *= 0.5;
      }
      theta += t * dir;
    }
    Logistic model;
    model.theta = std::move(theta);
    model.num_classes = num_classes;
    return model;
  }

  std::vector<int> predict(const Mat& x) const {
    Mat xa(x.rows(), x.cols() + 1);
    xa << x, Mat::Ones(x.rows(), 1);
    Mat logits = xa * theta;
    std::vector<int> out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      out[i] = static_cast<int>(arg);
    }
    return out;
  }
};

double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  return pred.empty() ? 0.0 : static_cast<double>(correct) / pred.size();
}

/// Per-class round-robin fold assignment; keeps every inner-CV train side
/// multi-class whenever the data allows it.
std::vector<std::vector<int>> stratified_folds(const std::vector<int>& labels, int fold_count,
                                               std::uint64_t seed) {
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> folds(fold_count);
  int next = 0;
  for (auto& [c, pool] : by_class) {
    auto rng = make_rng(seed, {0x57A7u, static_cast<std::uint64_t>(c)});
    std::shuffle(pool.begin(), pool.end(), rng);
    for (int idx : pool) folds[next++ % fold_count].push_back(idx);
  }
  return folds;
}

Mat take_rows(const Mat& x, const std::vector<int>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> take(const std::vector<int>& v, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace

EmbeddingTable extract_embeddings(const GraphDataset& ds, const ModelState& state, double lambda,
                                  const std::string& checkpoint_id) {
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("extract_embeddings: lambda must lie in [0, 1]");
  if (ds.size() == 0) throw ConfigError("extract_embeddings: empty dataset");
  NoGrad guard;
  EmbeddingTable table;
  table.lambda = lambda;
  table.checkpoint_id = checkpoint_id;
  table.embeddings.resize(ds.size(), state.encoder.embedding_dim);
  table.indices.resize(ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    const View v = identity_view(ds.graphs[i], i);
    const Mat student = encode(v, state.student, state.encoder).value();
    const Mat teacher = encode(v, state.teacher, state.encoder).value();
    table.embeddings.row(i) = lambda * student.row(0) + (1.0 - lambda) * teacher.row(0);
    table.indices[i] = i;
  }
  if (!table.embeddings.allFinite())
    throw NumericalError("extract_embeddings: non-finite embedding");
  return table;
}

void write_embeddings(const EmbeddingTable& table, const std::string& path,
                      const std::string& dataset_name) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot open embedding export for writing: " + path);
  out << "# dataset\t" << dataset_name << "\n";
  out << "# checkpoint\t" << (table.checkpoint_id.empty() ? "-" : table.checkpoint_id) << "\n";
  out << "# lambda\t" << table.lambda << "\n";
  out << "# dim\t" << table.embeddings.cols() << "\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < table.embeddings.rows(); ++i) {
    out << table.indices[i];
    for (Eigen::Index j = 0; j < table.embeddings.cols(); ++j) out << "\t" << table.embeddings(i, j);
    out << "\n";
  }
}

ProbeResult linear_probe(const Mat& train_x, const std::vector<int>& train_y, const Mat& test_x,
                         const std::vector<int>& test_y, const ProbeConfig& cfg) {
  if (cfg.c_grid.empty()) throw ConfigError("linear_probe: empty C grid");
  if (train_x.rows() < 2) throw DegenerateError("linear_probe: need at least 2 training points");
  std::set<int> train_classes(train_y.begin(), train_y.end());
  if (train_classes.size() < 2)
    throw DegenerateError("linear_probe: single-class training set");
  int num_classes = 0;
  for (int y : train_y) num_classes = std::max(num_classes, y + 1);
  for (int y : test_y) num_classes = std::max(num_classes, y + 1);

  const Standardizer stand = Standardizer::fit(train_x);
  const Mat xtr = stand.apply(train_x);
  const Mat xte = stand.apply(test_x);

  // Inner CV over the C grid (first best wins on ties).
  double best_c = cfg.c_grid.front();
  double best_score = -1.0;
  const int inner = std::max(2, std::min<int>(cfg.inner_folds, static_cast<int>(xtr.rows()) / 2));
  const auto folds = stratified_folds(train_y, inner, cfg.seed);
  for (double c : cfg.c_grid) {
    if (!(c > 0.0)) throw ConfigError("linear_probe: C values must be > 0");
    double score_sum = 0.0;
    int scored = 0;
    for (int f = 0; f < inner; ++f) {
      std::vector<int> inner_train;
      for (int g = 0; g < inner; ++g)
        if (g != f) inner_train.insert(inner_train.end(), folds[g].begin(), folds[g].end());
      if (folds[f].empty() || inner_train.empty()) continue;
      const auto ytr_inner = take(train_y, inner_train);
      if (std::set<int>(ytr_inner.begin(), ytr_inner.end()).size() < 2) continue;
      const Logistic model = Logistic::fit(take_rows(xtr, inner_train), ytr_inner, num_classes, c,
                                           cfg.max_iterations, cfg.tolerance);
      score_sum += accuracy_of(model.predict(take_rows(xtr, folds[f])), take(train_y, folds[f]));
      ++scored;
    }
    const double score = scored > 0 ? score_sum / scored : 0.0;
    if (score > best_score) {
      best_score = score;
      best_c = c;
    }
  }

  const Logistic model =
      Logistic::fit(xtr, train_y, num_classes, best_c, cfg.max_iterations, cfg.tolerance);
  ProbeResult result;
  result.predictions = model.predict(xte);
  result.accuracy = accuracy_of(result.predictions, test_y);
  result.chosen_c = best_c;
  return result;
}

EvalResult evaluate_embeddings(const EmbeddingTable& table, const std::vector<int>& labels,
                               int folds, int repeats, const ProbeConfig& probe_cfg) {
  if (static_cast<Eigen::Index>(labels.size()) != table.embeddings.rows())
    throw ConfigError("evaluate_embeddings: one label per embedding row required");
  if (repeats < 1) throw ConfigError("evaluate_embeddings: repeats must be >= 1");
  EvalResult result;
  for (int r = 0; r < repeats; ++r) {
    const auto fold_splits =
        make_folds(static_cast<int>(labels.size()), folds,
                   mix_seed(probe_cfg.seed, {0xF01Du, static_cast<std::uint64_t>(r)}));
    std::vector<double> fold_acc;
    for (std::size_t f = 0; f < fold_splits.size(); ++f) {
      ProbeConfig fold_cfg = probe_cfg;
      fold_cfg.seed = mix_seed(probe_cfg.seed,
                               {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(f)});
      const auto& split = fold_splits[f];
      const auto probe =
          linear_probe(take_rows(table.embeddings, split.train), take(labels, split.train),
                       take_rows(table.embeddings, split.test), take(labels, split.test), fold_cfg);
      fold_acc.push_back(probe.accuracy);
    }
    const double mean = std::accumulate(fold_acc.begin(), fold_acc.end(), 0.0) / fold_acc.size();
    result.per_repeat.push_back(mean);
    if (r + 1 == repeats) result.per_fold_last = fold_acc;
  }
  const double mean =
      std::accumulate(result.per_repeat.begin(), result.per_repeat.end(), 0.0) / repeats;
  double var = 0.0;
  for (double a : result.per_repeat) var += (a - mean) * (a - mean);
  result.mean_accuracy = mean;
  result.std_accuracy = std::sqrt(var / repeats);
  return result;
}

EvalResult evaluate_unsupervised(const GraphDataset& ds, const ModelState& state, int folds,
                                 int repeats, double lambda, const ProbeConfig& probe_cfg) {
  std::vector<int> labels;
  labels.reserve(ds.size());
  for (const Graph& g : ds.graphs) {
    if (!g.label) throw ConfigError("evaluate_unsupervised: dataset must be labeled downstream");
    labels.push_back(*g.label);
  }
  const EmbeddingTable table = extract_embeddings(ds, state, lambda);
  return evaluate_embeddings(table, labels, folds, repeats, probe_cfg);
}

}  // namespace igsd
