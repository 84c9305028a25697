#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "igsd/synthetic.hpp"
#include "igsd/trainer.hpp"

using namespace igsd;

namespace {

GraphDataset tiny_dataset(int graphs = 12, std::uint64_t seed = 1) {
  SyntheticConfig cfg;
  cfg.graph_count = graphs;
  cfg.nodes_min = 6;
  cfg.nodes_max = 10;
  cfg.edge_prob = 0.3;
  cfg.clique_size = 5;
  cfg.seed = seed;
  return make_planted_dataset(cfg);
}

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.encoder = {EncoderKind::GCN, 2, 8, 8};
  cfg.heads = {12, 6, 6};
  cfg.epochs = 2;
  cfg.batch_size = 6;
  cfg.learning_rate = 1e-3;
  cfg.seed = 3;
  return cfg;
}

double param_delta(const ParamMap& a, const ParamMap& b) {
  double total = 0.0;
  for (const auto& [name, t] : a) {
    auto it = b.find(name);
    if (it != b.end()) total += (t.value() - it->second.value()).squaredNorm();
  }
  return std::sqrt(total);
}

}  // namespace

TEST_CASE("train_unsupervised update mechanics") {
  const GraphDataset ds = tiny_dataset();
  RunConfig cfg = tiny_config();
  cfg.epochs = 1;

  const ModelState before = ModelState::init(cfg.encoder, cfg.heads, ds.feature_dim, 0,
                                             cfg.ema_decay, cfg.seed);
  const auto result = train_unsupervised(strip_labels(ds), cfg);

  const double student_delta = param_delta(before.student, result.state.student);
  const double teacher_delta = param_delta(before.teacher, result.state.teacher);
  CHECK(student_delta > 0.0);
  CHECK(teacher_delta > 0.0);
  CHECK(teacher_delta < student_delta);  // tau = 0.99 damps the teacher
  CHECK(result.trace.size() == 1);
  CHECK(result.state.student_steps == result.state.ema_steps);
}

TEST_CASE("train_unsupervised with zero learning rate freezes the student") {
  const GraphDataset ds = tiny_dataset();
  RunConfig cfg = tiny_config();
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;

  const ModelState before = ModelState::init(cfg.encoder, cfg.heads, ds.feature_dim, 0,
                                             cfg.ema_decay, cfg.seed);
  const auto result = train_unsupervised(strip_labels(ds), cfg);
  CHECK(param_delta(before.student, result.state.student) == 0.0);
  // teacher == student at init and the student never moves, so EMA is a no-op
  CHECK(param_delta(before.teacher, result.state.teacher) == 0.0);
}

TEST_CASE("train_unsupervised loss decreases on the planted set (5-seed majority)") {
  SyntheticConfig scfg;
  scfg.graph_count = 24;
  scfg.nodes_min = 6;
  scfg.nodes_max = 10;
  scfg.clique_size = 5;
  const GraphDataset ds = make_planted_dataset(scfg);
  RunConfig cfg = tiny_config();
  cfg.epochs = 20;
  cfg.batch_size = 8;
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto result = train_unsupervised(strip_labels(ds), cfg);
    if (result.trace.back().loss_total < result.trace.front().loss_total) ++improved;
  }
  CHECK(improved >= 3);
}

TEST_CASE("determinism: same config and seed reproduce the metric trace") {
  const GraphDataset ds = tiny_dataset();
  RunConfig cfg = tiny_config();
  const auto a = train_unsupervised(strip_labels(ds), cfg);
  const auto b = train_unsupervised(strip_labels(ds), cfg);
  CHECK(trace_equal(a.trace, b.trace));
  CHECK(param_delta(a.state.student, b.state.student) == 0.0);

  cfg.seed += 1;
  const auto c = train_unsupervised(strip_labels(ds), cfg);
  CHECK_FALSE(trace_equal(a.trace, c.trace));
}

TEST_CASE("train_semi bookkeeping") {
  const GraphDataset ds = tiny_dataset(20);
  const SemiSplit split = split_semi(ds, {0.25, 5, 2});
  RunConfig cfg = tiny_config();
  cfg.weights = {1.0, 0.5, 1.0};
  cfg.epochs = 2;

  const auto result = train_semi(ds, split, cfg, {}, &split.unlabeled);
  REQUIRE(result.trace.size() == 2);
  for (const auto& record : result.trace) {
    CHECK(record.loss_ce > 0.0);
    CHECK(record.loss_unsup > 0.0);
    CHECK(record.loss_supcon >= 0.0);
    CHECK(record.eval_accuracy >= 0.0);
    CHECK(std::abs(record.loss_total -
                   (record.loss_ce + 1.0 * record.loss_unsup + 0.5 * record.loss_supcon)) < 1e-9);
  }
  CHECK(result.pseudo_labels.empty());
}

TEST_CASE("train_semi trace is deterministic and weight-zero run matches a CE-only objective") {
  const GraphDataset ds = tiny_dataset(16);
  const SemiSplit split = split_semi(ds, {0.25, 5, 4});
  RunConfig cfg = tiny_config();
  cfg.weights = {0.0, 0.0, 1.0};
  const auto a = train_semi(ds, split, cfg);
  const auto b = train_semi(ds, split, cfg);
  CHECK(trace_equal(a.trace, b.trace));
  for (const auto& record : a.trace)
    CHECK(record.loss_total == doctest::Approx(record.loss_ce).epsilon(1e-12));
}

TEST_CASE("self_train_round thresholding") {
  const GraphDataset ds = tiny_dataset(10);
  RunConfig cfg = tiny_config();
  ModelState state = ModelState::init(cfg.encoder, cfg.heads, ds.feature_dim, ds.num_classes,
                                      cfg.ema_decay, 11);
  const std::vector<int> pool{0, 1, 2, 3, 4};

  SUBCASE("threshold 1.0 with a non-degenerate softmax -> empty set") {
    const auto labels = self_train_round(state, ds, pool, 1.0);
    CHECK(labels.empty());
  }
  SUBCASE("low threshold labels the whole pool, never over threshold") {
    const auto labels = self_train_round(state, ds, pool, 0.5 + 1e-9);
    for (const auto& [idx, pl] : labels) {
      CHECK(pl.confidence >= 0.5);
      CHECK((pl.label == 0 || pl.label == 1));
    }
  }
  SUBCASE("empty pool is fine") {
    CHECK(self_train_round(state, ds, {}, 0.9).empty());
  }
  SUBCASE("re-labeling only on higher confidence") {
    PseudoLabelSet existing;
    existing[0] = {0, 0.999999, 0};
    const auto updated = self_train_round(state, ds, {0}, 0.5 + 1e-9, 1, existing);
    REQUIRE(updated.count(0) == 1);
    // stored confidence is close to 1; a fresh untrained classifier cannot beat it
    CHECK(updated.at(0).confidence == doctest::Approx(0.999999));
    CHECK(updated.at(0).round == 0);
  }
}

TEST_CASE("run_self_training") {
  const GraphDataset ds = tiny_dataset(20);
  const SemiSplit split = split_semi(ds, {0.25, 5, 6});
  RunConfig cfg = tiny_config();
  cfg.weights = {0.5, 0.5, 1.0};
  cfg.epochs = 4;
  cfg.self_train = {true, 2, 2, 0.9};

  SUBCASE("0 iterations reduce to plain train_semi with start_epoch epochs") {
    RunConfig zero = cfg;
    zero.self_train.iterations = 0;
    const auto st = run_self_training(ds, split, zero);
    RunConfig plain = cfg;
    plain.self_train.enabled = false;
    plain.epochs = cfg.self_train.start_epoch;
    const auto semi = train_semi(ds, split, plain);
    CHECK(trace_equal(st.trace, semi.trace));
  }
  SUBCASE("labeled set grows monotonically; pseudo-labels avoid the labeled split") {
    std::vector<int> counts;
    const auto result = train_semi(ds, split, cfg, [&](const EpochRecord& r, const ModelState&) {
      counts.push_back(r.pseudo_count);
    });
    REQUIRE(counts.size() == 4);  // 2 warm-up + 2 rounds
    for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] >= counts[i - 1]);
    for (const auto& [idx, pl] : result.pseudo_labels) {
      CHECK(std::find(split.labeled.begin(), split.labeled.end(), idx) == split.labeled.end());
      CHECK(pl.confidence >= 0.9);
    }
  }
  SUBCASE("threshold outside (1/C, 1] rejected") {
    RunConfig bad = cfg;
    bad.self_train.threshold = 0.5;  // == 1/C for two classes
    CHECK_THROWS_AS(train_semi(ds, split, bad), ConfigError);
  }
}

TEST_CASE("trainer config validation") {
  const GraphDataset ds = tiny_dataset();
  RunConfig cfg = tiny_config();
  SUBCASE("batch_size < 2") {
    cfg.batch_size = 1;
    CHECK_THROWS_AS(train_unsupervised(strip_labels(ds), cfg), ConfigError);
  }
  SUBCASE("negative weight") {
    cfg.weights.w = -1.0;
    CHECK_THROWS_AS(train_unsupervised(strip_labels(ds), cfg), ConfigError);
  }
  SUBCASE("start_epoch beyond epochs") {
    cfg.self_train = {true, 10, 1, 0.9};
    cfg.epochs = 5;
    const SemiSplit split = split_semi(ds, {0.5, 3, 1});
    CHECK_THROWS_AS(train_semi(ds, split, cfg), ConfigError);
  }
}

TEST_CASE("ema ordering: teacher updates exactly once per optimizer step") {
  const GraphDataset ds = tiny_dataset();
  RunConfig cfg = tiny_config();
  cfg.epochs = 2;
  const auto result = train_unsupervised(strip_labels(ds), cfg);
  CHECK(result.state.student_steps > 0);
  CHECK(result.state.student_steps == result.state.ema_steps);
}
