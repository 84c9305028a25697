#include "igsd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "igsd/checkpoint.hpp"
#include "igsd/evaluate.hpp"
#include "igsd/synthetic.hpp"

namespace igsd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string command_name(Command c) {
  switch (c) {
    case Command::TrainUnsup: return "train-unsup";
    case Command::TrainSemi: return "train-semi";
    case Command::SelfTrain: return "self-train";
    case Command::Embed: return "embed";
    case Command::Eval: return "eval";
    case Command::Sweep: return "sweep";
  }
  throw ConfigError("unknown command");
}

Command parse_command(const std::string& name) {
  if (name == "train-unsup") return Command::TrainUnsup;
  if (name == "train-semi") return Command::TrainSemi;
  if (name == "self-train") return Command::SelfTrain;
  if (name == "embed") return Command::Embed;
  if (name == "eval") return Command::Eval;
  if (name == "sweep") return Command::Sweep;
  throw ConfigError("unknown command: " + name);
}

namespace {

EncoderKind parse_encoder(const std::string& s) {
  if (s == "gcn") return EncoderKind::GCN;
  if (s == "gin") return EncoderKind::GIN;
  throw ConfigError("encoder must be 'gcn' or 'gin', got '" + s + "'");
}

std::string encoder_name(EncoderKind k) { return k == EncoderKind::GCN ? "gcn" : "gin"; }

ViewKind parse_augment(const std::string& s) {
  if (s == "diffuse") return ViewKind::Diffused;
  if (s == "edge-drop") return ViewKind::EdgeDropped;
  if (s == "identity") return ViewKind::Identity;
  throw ConfigError("augment must be 'diffuse', 'edge-drop' or 'identity', got '" + s + "'");
}

std::string augment_name(ViewKind k) {
  switch (k) {
    case ViewKind::Diffused: return "diffuse";
    case ViewKind::EdgeDropped: return "edge-drop";
    case ViewKind::Identity: return "identity";
  }
  throw ConfigError("unknown augment strategy");
}

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void apply_config_entry(ExperimentSpec& spec, const std::string& key, const json& value) {
  RunConfig& run = spec.run;
  if (key == "command") spec.command = parse_command(get_as<std::string>(value, key));
  else if (key == "dataset") spec.dataset = get_as<std::string>(value, key);
  else if (key == "data-dir") spec.data_dir = get_as<std::string>(value, key);
  else if (key == "out") spec.out_dir = get_as<std::string>(value, key);
  else if (key == "checkpoint") spec.checkpoint = get_as<std::string>(value, key);
  else if (key == "encoder") run.encoder.kind = parse_encoder(get_as<std::string>(value, key));
  else if (key == "layers") run.encoder.layer_count = get_as<int>(value, key);
  else if (key == "hidden-dim") run.encoder.hidden_dim = get_as<int>(value, key);
  else if (key == "embedding-dim") run.encoder.embedding_dim = get_as<int>(value, key);
  else if (key == "proj-hidden") run.heads.projector_hidden = get_as<int>(value, key);
  else if (key == "proj-dim") {
    run.heads.projection_dim = get_as<int>(value, key);
    run.heads.predictor_hidden = run.heads.projection_dim;
  } else if (key == "epochs") run.epochs = get_as<int>(value, key);
  else if (key == "batch-size") run.batch_size = get_as<int>(value, key);
  else if (key == "lr") run.learning_rate = get_as<double>(value, key);
  else if (key == "tau") run.ema_decay = get_as<double>(value, key);
  else if (key == "alpha") run.augment.diffusion.alpha = get_as<double>(value, key);
  else if (key == "sparsify-eps") run.augment.diffusion.sparsify_epsilon = get_as<double>(value, key);
  else if (key == "lambda") run.mixup_lambda = get_as<double>(value, key);
  else if (key == "w") run.weights.w = get_as<double>(value, key);
  else if (key == "w-prime") run.weights.w_prime = get_as<double>(value, key);
  else if (key == "temperature") run.weights.temperature = get_as<double>(value, key);
  else if (key == "unsup-literal-sign") run.unsup_literal_sign = get_as<bool>(value, key);
  else if (key == "k-views") run.k_views = get_as<int>(value, key);
  else if (key == "augment") run.augment.strategy = parse_augment(get_as<std::string>(value, key));
  else if (key == "edge-drop-prob") run.augment.edge_drop_prob = get_as<double>(value, key);
  else if (key == "labeled-fraction") run.labeled_fraction = get_as<double>(value, key);
  else if (key == "self-train") run.self_train.enabled = get_as<bool>(value, key);
  else if (key == "st-start-epoch") run.self_train.start_epoch = get_as<int>(value, key);
  else if (key == "st-iterations") run.self_train.iterations = get_as<int>(value, key);
  else if (key == "st-threshold") run.self_train.threshold = get_as<double>(value, key);
  else if (key == "checkpoint-every") run.checkpoint_every = get_as<int>(value, key);
  else if (key == "seeds") spec.seeds = get_as<std::vector<std::uint64_t>>(value, key);
  else if (key == "folds") spec.folds = get_as<int>(value, key);
  else if (key == "repeats") spec.repeats = get_as<int>(value, key);
  else if (key == "batch-sizes") spec.sweep_batch_sizes = get_as<std::vector<int>>(value, key);
  else if (key == "parallel-seeds") spec.parallel_seeds = get_as<bool>(value, key);
  else if (key == "max-degree-cap") spec.max_degree_cap = get_as<int>(value, key);
  else throw ConfigError("unknown config key: " + key);
}

}  // namespace

ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  ExperimentSpec spec;
  for (const auto& [key, value] : j.items()) apply_config_entry(spec, key, value);
  if (!spec.seeds.empty() && spec.seeds.size() > 0) spec.run.seed = spec.seeds.front();
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  const RunConfig& run = spec.run;
  json j;
  j["command"] = command_name(spec.command);
  j["dataset"] = spec.dataset;
  j["data-dir"] = spec.data_dir;
  j["out"] = spec.out_dir;
  if (!spec.checkpoint.empty()) j["checkpoint"] = spec.checkpoint;
  j["encoder"] = encoder_name(run.encoder.kind);
  j["layers"] = run.encoder.layer_count;
  j["hidden-dim"] = run.encoder.hidden_dim;
  j["embedding-dim"] = run.encoder.embedding_dim;
  j["proj-hidden"] = run.heads.projector_hidden;
  j["proj-dim"] = run.heads.projection_dim;
  j["epochs"] = run.epochs;
  j["batch-size"] = run.batch_size;
  j["lr"] = run.learning_rate;
  j["tau"] = run.ema_decay;
  j["alpha"] = run.augment.diffusion.alpha;
  j["sparsify-eps"] = run.augment.diffusion.sparsify_epsilon;
  j["lambda"] = run.mixup_lambda;
  j["w"] = run.weights.w;
  j["w-prime"] = run.weights.w_prime;
  j["temperature"] = run.weights.temperature;
  j["unsup-literal-sign"] = run.unsup_literal_sign;
  j["k-views"] = run.k_views;
  j["augment"] = augment_name(run.augment.strategy);
  j["edge-drop-prob"] = run.augment.edge_drop_prob;
  j["labeled-fraction"] = run.labeled_fraction;
  j["self-train"] = run.self_train.enabled;
  j["st-start-epoch"] = run.self_train.start_epoch;
  j["st-iterations"] = run.self_train.iterations;
  j["st-threshold"] = run.self_train.threshold;
  j["checkpoint-every"] = run.checkpoint_every;
  j["seeds"] = spec.seeds;
  j["folds"] = spec.folds;
  j["repeats"] = spec.repeats;
  j["batch-sizes"] = spec.sweep_batch_sizes;
  j["parallel-seeds"] = spec.parallel_seeds;
  j["max-degree-cap"] = spec.max_degree_cap;
  return j.dump(2);
}

void save_config(const ExperimentSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write config echo: " + path);
  out << spec_to_json(spec) << "\n";
}

GraphDataset load_dataset(const ExperimentSpec& spec) {
  if (spec.dataset == "synth" || spec.dataset == "SYNTH") {
    SyntheticConfig cfg;
    cfg.max_degree_cap = spec.max_degree_cap;
    return make_planted_dataset(cfg);
  }
  const fs::path dir = fs::path(spec.data_dir) / spec.dataset;
  if (!fs::exists(dir))
    throw IOError("dataset not found: " + dir.string() +
                  " (expected a TU-format directory; see README for fetching instructions)");
  return parse_tu_dataset(dir.string(), spec.dataset, spec.max_degree_cap);
}

namespace {

struct SeedOutcome {
  std::uint64_t seed = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double best_accuracy = -1.0;
  double final_accuracy = -1.0;
  double final_loss = 0.0;
  int pseudo_count = 0;
};

json outcome_to_json(const SeedOutcome& o, Command cmd) {
  json j;
  j["seed"] = o.seed;
  if (cmd == Command::TrainUnsup || cmd == Command::Eval || cmd == Command::Sweep) {
    j["accuracy_mean"] = o.accuracy_mean;
    j["accuracy_std"] = o.accuracy_std;
  } else {
    j["best_accuracy"] = o.best_accuracy;
    j["final_accuracy"] = o.final_accuracy;
    j["pseudo_count"] = o.pseudo_count;
  }
  j["final_loss"] = o.final_loss;
  return j;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / xs.size())};
}

EpochCallback make_epoch_sink(MetricsWriter& writer, const ExperimentSpec& spec,
                              std::uint64_t seed) {
  return [&writer, &spec, seed](const EpochRecord& record, const ModelState& state) {
    writer.append(record);
    if (spec.run.checkpoint_every > 0 && (record.epoch + 1) % spec.run.checkpoint_every == 0) {
      const fs::path path = fs::path(spec.out_dir) /
                            ("checkpoint-seed" + std::to_string(seed) + "-epoch" +
                             std::to_string(record.epoch + 1) + ".bin");
      save_model_state(path.string(), state);
    }
  };
}

/// Training + downstream evaluation for one seed of train-unsup / sweep.
SeedOutcome run_unsup_seed(const ExperimentSpec& spec, const GraphDataset& ds,
                           std::uint64_t seed) {
  RunConfig cfg = spec.run;
  cfg.seed = seed;
  MetricsWriter writer((fs::path(spec.out_dir) /
                        ("metrics-seed" + std::to_string(seed) + ".jsonl")).string());
  auto result = train_unsupervised(strip_labels(ds), cfg, make_epoch_sink(writer, spec, seed));
  save_model_state(
      (fs::path(spec.out_dir) / ("checkpoint-seed" + std::to_string(seed) + ".bin")).string(),
      result.state);
  ProbeConfig probe;
  probe.seed = seed;
  const EvalResult eval =
      evaluate_unsupervised(ds, result.state, spec.folds, spec.repeats, cfg.mixup_lambda, probe);
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.accuracy_mean = eval.mean_accuracy;
  outcome.accuracy_std = eval.std_accuracy;
  outcome.final_loss = result.trace.empty() ? 0.0 : result.trace.back().loss_total;
  return outcome;
}

SeedOutcome run_semi_seed(const ExperimentSpec& spec, const GraphDataset& ds, std::uint64_t seed,
                          bool self_training) {
  RunConfig cfg = spec.run;
  cfg.seed = seed;
  cfg.self_train.enabled = self_training || cfg.self_train.enabled;
  SplitSpec split_spec{cfg.labeled_fraction, spec.folds, seed};
  const SemiSplit split = split_semi(ds, split_spec);
  MetricsWriter writer((fs::path(spec.out_dir) /
                        ("metrics-seed" + std::to_string(seed) + ".jsonl")).string());
  auto result = train_semi(ds, split, cfg, make_epoch_sink(writer, spec, seed), &split.unlabeled);
  save_model_state(
      (fs::path(spec.out_dir) / ("checkpoint-seed" + std::to_string(seed) + ".bin")).string(),
      result.state);
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.pseudo_count = static_cast<int>(result.pseudo_labels.size());
  for (const EpochRecord& r : result.trace)
    outcome.best_accuracy = std::max(outcome.best_accuracy, r.eval_accuracy);
  if (!result.trace.empty()) {
    outcome.final_accuracy = result.trace.back().eval_accuracy;
    outcome.final_loss = result.trace.back().loss_total;
  }
  return outcome;
}

void write_summary(const ExperimentSpec& spec, const json& summary) {
  std::ofstream out(fs::path(spec.out_dir) / "summary.json");
  if (!out) throw IOError("cannot write summary.json under " + spec.out_dir);
  out << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << std::endl;
}

std::vector<SeedOutcome> run_over_seeds(
    const ExperimentSpec& spec,
    const std::function<SeedOutcome(std::uint64_t)>& one_seed) {
  std::vector<SeedOutcome> outcomes(spec.seeds.size());
  if (spec.parallel_seeds && spec.seeds.size() > 1) {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < spec.seeds.size(); ++i)
      workers.emplace_back([&, i] { outcomes[i] = one_seed(spec.seeds[i]); });
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) outcomes[i] = one_seed(spec.seeds[i]);
  }
  return outcomes;
}

int run_impl(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw ConfigError("at least one seed is required");
  fs::create_directories(spec.out_dir);
  save_config(spec, (fs::path(spec.out_dir) / "config.json").string());
  std::cout << "resolved config written to " << (fs::path(spec.out_dir) / "config.json").string()
            << std::endl;

  json summary;
  summary["command"] = command_name(spec.command);
  summary["dataset"] = spec.dataset;

  switch (spec.command) {
    case Command::TrainUnsup: {
      const GraphDataset ds = load_dataset(spec);
      auto outcomes = run_over_seeds(spec, [&](std::uint64_t s) { return run_unsup_seed(spec, ds, s); });
      std::vector<double> accs;
      json per_seed = json::array();
      for (const auto& o : outcomes) {
        accs.push_back(o.accuracy_mean);
        per_seed.push_back(outcome_to_json(o, spec.command));
      }
      auto [mean, sd] = mean_std(accs);
      summary["per_seed"] = per_seed;
      summary["accuracy_mean"] = mean;
      summary["accuracy_std"] = sd;
      break;
    }
    case Command::TrainSemi:
    case Command::SelfTrain: {
      const GraphDataset ds = load_dataset(spec);
      const bool self_training = spec.command == Command::SelfTrain;
      auto outcomes = run_over_seeds(
          spec, [&](std::uint64_t s) { return run_semi_seed(spec, ds, s, self_training); });
      std::vector<double> best, final;
      json per_seed = json::array();
      for (const auto& o : outcomes) {
        best.push_back(o.best_accuracy);
        final.push_back(o.final_accuracy);
        per_seed.push_back(outcome_to_json(o, spec.command));
      }
      auto [bm, bs] = mean_std(best);
      auto [fm, fsd] = mean_std(final);
      summary["per_seed"] = per_seed;
      summary["best_accuracy_mean"] = bm;
      summary["best_accuracy_std"] = bs;
      summary["final_accuracy_mean"] = fm;
      summary["final_accuracy_std"] = fsd;
      break;
    }
    case Command::Embed: {
      if (spec.checkpoint.empty()) throw ConfigError("embed requires --checkpoint");
      const GraphDataset ds = load_dataset(spec);
      const ModelState state = load_model_state(spec.checkpoint);
      const auto table =
          extract_embeddings(ds, state, spec.run.mixup_lambda, fs::path(spec.checkpoint).filename());
      const auto path = fs::path(spec.out_dir) / "embeddings.tsv";
      write_embeddings(table, path.string(), ds.name);
      summary["embeddings"] = path.string();
      summary["rows"] = static_cast<int>(table.embeddings.rows());
      break;
    }
    case Command::Eval: {
      if (spec.checkpoint.empty()) throw ConfigError("eval requires --checkpoint");
      const GraphDataset ds = load_dataset(spec);
      const ModelState state = load_model_state(spec.checkpoint);
      ProbeConfig probe;
      probe.seed = spec.seeds.front();
      const EvalResult eval = evaluate_unsupervised(ds, state, spec.folds, spec.repeats,
                                                    spec.run.mixup_lambda, probe);
      summary["accuracy_mean"] = eval.mean_accuracy;
      summary["accuracy_std"] = eval.std_accuracy;
      summary["per_repeat"] = eval.per_repeat;
      break;
    }
    case Command::Sweep: {
      const GraphDataset ds = load_dataset(spec);
      std::vector<int> sizes = spec.sweep_batch_sizes;
      std::sort(sizes.begin(), sizes.end());
      json rows = json::array();
      for (int bs : sizes) {
        ExperimentSpec sub = spec;
        sub.run.batch_size = bs;
        auto outcomes =
            run_over_seeds(sub, [&](std::uint64_t s) { return run_unsup_seed(sub, ds, s); });
        std::vector<double> accs;
        for (const auto& o : outcomes) accs.push_back(o.accuracy_mean);
        auto [mean, sd] = mean_std(accs);
        json row;
        row["batch_size"] = bs;
        row["accuracy_mean"] = mean;
        row["accuracy_std"] = sd;
        rows.push_back(row);
        std::cout << "sweep batch_size=" << bs << " accuracy=" << mean << " +- " << sd << std::endl;
      }
      summary["rows"] = rows;
      break;
    }
  }
  write_summary(spec, summary);
  return 0;
}

}  // namespace

int run(const ExperimentSpec& spec) {
  try {
    return run_impl(spec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const IOError& e) {
    std::cerr << "io error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}

}  // namespace igsd
