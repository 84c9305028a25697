#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "igsd/cli.hpp"
#include "igsd/metrics.hpp"

using namespace igsd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("igsd_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p);
  out << contents;
}

}  // namespace

TEST_CASE("load_config") {
  TempDir tmp("load");
  SUBCASE("empty object applies defaults (tau 0.99, lambda 0.5, alpha 0.2)") {
    write_file(tmp.path / "c.json", "{}");
    const ExperimentSpec spec = load_config((tmp.path / "c.json").string());
    CHECK(spec.run.ema_decay == 0.99);
    CHECK(spec.run.mixup_lambda == 0.5);
    CHECK(spec.run.augment.diffusion.alpha == 0.2);
    CHECK(spec.run.weights.temperature == 1.0);
  }
  SUBCASE("recognized keys are applied") {
    write_file(tmp.path / "c.json",
               R"({"epochs": 7, "batch-size": 16, "tau": 0.9, "encoder": "gin",
                   "augment": "edge-drop", "seeds": [3, 4], "self-train": true})");
    const ExperimentSpec spec = load_config((tmp.path / "c.json").string());
    CHECK(spec.run.epochs == 7);
    CHECK(spec.run.batch_size == 16);
    CHECK(spec.run.ema_decay == 0.9);
    CHECK(spec.run.encoder.kind == EncoderKind::GIN);
    CHECK(spec.run.augment.strategy == ViewKind::EdgeDropped);
    CHECK(spec.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(spec.run.seed == 3);
    CHECK(spec.run.self_train.enabled);
  }
  SUBCASE("misspelled key is rejected by name") {
    write_file(tmp.path / "c.json", R"({"epohcs": 7})");
    try {
      load_config((tmp.path / "c.json").string());
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("epohcs") != std::string::npos);
    }
  }
  SUBCASE("type mismatch is rejected by key") {
    write_file(tmp.path / "c.json", R"({"epochs": "twenty"})");
    try {
      load_config((tmp.path / "c.json").string());
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("epochs") != std::string::npos);
    }
  }
  SUBCASE("invalid JSON rejected") {
    write_file(tmp.path / "c.json", "{nope");
    CHECK_THROWS_AS(load_config((tmp.path / "c.json").string()), ConfigError);
  }
}

TEST_CASE("spec serialization round-trips through load_config") {
  TempDir tmp("round");
  ExperimentSpec spec;
  spec.command = Command::TrainSemi;
  spec.dataset = "synth";
  spec.run.epochs = 9;
  spec.run.weights = {0.25, 0.75, 2.0};
  spec.run.self_train = {true, 3, 4, 0.92};
  spec.seeds = {11, 12};
  spec.folds = 4;
  save_config(spec, (tmp.path / "c.json").string());
  const ExperimentSpec loaded = load_config((tmp.path / "c.json").string());
  CHECK(loaded.command == Command::TrainSemi);
  CHECK(loaded.run.epochs == 9);
  CHECK(loaded.run.weights.w == 0.25);
  CHECK(loaded.run.weights.w_prime == 0.75);
  CHECK(loaded.run.weights.temperature == 2.0);
  CHECK(loaded.run.self_train.enabled);
  CHECK(loaded.run.self_train.iterations == 4);
  CHECK(loaded.seeds == spec.seeds);
  CHECK(loaded.folds == 4);
}

TEST_CASE("run exit codes") {
  TempDir tmp("codes");
  SUBCASE("dataset not found -> 3") {
    ExperimentSpec spec;
    spec.dataset = "NOPE";
    spec.data_dir = (tmp.path / "missing").string();
    spec.out_dir = (tmp.path / "out").string();
    CHECK(run(spec) == 3);
  }
  SUBCASE("config error -> 2") {
    ExperimentSpec spec;
    spec.seeds.clear();
    spec.out_dir = (tmp.path / "out2").string();
    CHECK(run(spec) == 2);
  }
  SUBCASE("embed without checkpoint -> 2") {
    ExperimentSpec spec;
    spec.command = Command::Embed;
    spec.dataset = "synth";
    spec.out_dir = (tmp.path / "out3").string();
    CHECK(run(spec) == 2);
  }
}

TEST_CASE("train-unsup run writes artifacts and a consistent summary") {
  TempDir tmp("artifacts");
  ExperimentSpec spec;
  spec.command = Command::TrainUnsup;
  spec.dataset = "synth";
  spec.out_dir = (tmp.path / "out").string();
  spec.run.epochs = 1;
  spec.run.batch_size = 64;
  spec.folds = 4;
  spec.repeats = 1;
  spec.seeds = {1, 2};
  REQUIRE(run(spec) == 0);

  CHECK(fs::exists(tmp.path / "out" / "config.json"));
  CHECK(fs::exists(tmp.path / "out" / "metrics-seed1.jsonl"));
  CHECK(fs::exists(tmp.path / "out" / "metrics-seed2.jsonl"));
  CHECK(fs::exists(tmp.path / "out" / "checkpoint-seed1.bin"));
  CHECK(fs::exists(tmp.path / "out" / "summary.json"));

  // summary statistics recompute from the per-seed records
  std::ifstream in(tmp.path / "out" / "summary.json");
  nlohmann::json summary;
  in >> summary;
  const auto per_seed = summary.at("per_seed");
  REQUIRE(per_seed.size() == 2);
  double mean = 0.0;
  for (const auto& row : per_seed) mean += row.at("accuracy_mean").get<double>();
  mean /= per_seed.size();
  CHECK(summary.at("accuracy_mean").get<double>() == doctest::Approx(mean).epsilon(1e-12));
  double var = 0.0;
  for (const auto& row : per_seed) {
    const double d = row.at("accuracy_mean").get<double>() - mean;
    var += d * d;
  }
  CHECK(summary.at("accuracy_std").get<double>() ==
        doctest::Approx(std::sqrt(var / per_seed.size())).epsilon(1e-12));

  SUBCASE("re-running from the serialized config reproduces the trace") {
    const auto trace1 = read_metrics((tmp.path / "out" / "metrics-seed1.jsonl").string());
    ExperimentSpec reloaded = load_config((tmp.path / "out" / "config.json").string());
    reloaded.out_dir = (tmp.path / "out_rerun").string();
    REQUIRE(run(reloaded) == 0);
    const auto trace2 = read_metrics((tmp.path / "out_rerun" / "metrics-seed1.jsonl").string());
    CHECK(trace_equal(trace1, trace2));
  }
}

TEST_CASE("embed and eval commands consume a checkpoint") {
  TempDir tmp("embed");
  ExperimentSpec spec;
  spec.command = Command::TrainUnsup;
  spec.dataset = "synth";
  spec.out_dir = (tmp.path / "out").string();
  spec.run.epochs = 1;
  spec.run.batch_size = 64;
  spec.folds = 4;
  spec.repeats = 1;
  spec.seeds = {1};
  REQUIRE(run(spec) == 0);

  ExperimentSpec embed = spec;
  embed.command = Command::Embed;
  embed.checkpoint = (tmp.path / "out" / "checkpoint-seed1.bin").string();
  embed.out_dir = (tmp.path / "emb").string();
  REQUIRE(run(embed) == 0);
  CHECK(fs::exists(tmp.path / "emb" / "embeddings.tsv"));

  ExperimentSpec eval = embed;
  eval.command = Command::Eval;
  eval.out_dir = (tmp.path / "eval").string();
  REQUIRE(run(eval) == 0);
  std::ifstream in(tmp.path / "eval" / "summary.json");
  nlohmann::json summary;
  in >> summary;
  CHECK(summary.at("accuracy_mean").get<double>() >= 0.0);
}
