#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "igsd/cli.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

/// Find --config before the real parse so file values become the defaults
/// that explicit flags then override.
std::string prescan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  igsd::ExperimentSpec spec;
  const std::string config_path = prescan_config_path(argc, argv);
  if (!config_path.empty()) {
    try {
      spec = igsd::load_config(config_path);
    } catch (const igsd::ConfigError& e) {
      std::cerr << "config error: " << e.what() << std::endl;
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << std::endl;
      return 2;
    }
  }

  CLI::App app{"IGSD: teacher-student graph self-distillation"};
  app.require_subcommand(config_path.empty() ? 1 : 0, 1);

  std::string encoder = spec.run.encoder.kind == igsd::EncoderKind::GCN ? "gcn" : "gin";
  std::string augment = spec.run.augment.strategy == igsd::ViewKind::Diffused    ? "diffuse"
                        : spec.run.augment.strategy == igsd::ViewKind::Identity ? "identity"
                                                                                : "edge-drop";
  std::string seeds_csv;
  std::string batch_sizes_csv;
  std::string config_opt;

  app.add_option("--config", config_opt, "JSON config file; flags override file values");
  app.add_option("--dataset", spec.dataset, "dataset name ('synth' or a TU directory name)");
  app.add_option("--data-dir", spec.data_dir, "directory containing TU datasets");
  app.add_option("--out", spec.out_dir, "output directory");
  app.add_option("--checkpoint", spec.checkpoint, "input checkpoint (embed/eval)");
  app.add_option("--encoder", encoder, "encoder kind: gcn | gin")
      ->check(CLI::IsMember({"gcn", "gin"}));
  app.add_option("--layers", spec.run.encoder.layer_count, "encoder layer count");
  app.add_option("--hidden-dim", spec.run.encoder.hidden_dim, "encoder hidden dimension");
  app.add_option("--embedding-dim", spec.run.encoder.embedding_dim, "graph embedding dimension");
  app.add_option("--proj-hidden", spec.run.heads.projector_hidden, "projector hidden size");
  app.add_option("--proj-dim", spec.run.heads.projection_dim, "projection size");
  app.add_option("--epochs", spec.run.epochs, "training epochs");
  app.add_option("--batch-size", spec.run.batch_size, "minibatch size");
  app.add_option("--lr", spec.run.learning_rate, "Adam learning rate");
  app.add_option("--tau", spec.run.ema_decay, "EMA decay of the teacher");
  app.add_option("--alpha", spec.run.augment.diffusion.alpha, "PPR teleport probability");
  app.add_option("--sparsify-eps", spec.run.augment.diffusion.sparsify_epsilon,
                 "diffusion sparsification threshold");
  app.add_option("--lambda", spec.run.mixup_lambda, "mixup coefficient for inference embeddings");
  app.add_option("--w", spec.run.weights.w, "weight of the unsupervised term");
  app.add_option("--w-prime", spec.run.weights.w_prime, "weight of the supervised contrastive term");
  app.add_option("--temperature", spec.run.weights.temperature, "InfoNCE temperature");
  app.add_flag("--unsup-literal-sign", spec.run.unsup_literal_sign,
               "use +consistency as the InfoNCE logit (comparison mode)");
  app.add_option("--k-views", spec.run.k_views, "augmented views per labeled graph");
  app.add_option("--augment", augment, "view strategy: diffuse | edge-drop | identity")
      ->check(CLI::IsMember({"diffuse", "edge-drop", "identity"}));
  app.add_option("--edge-drop-prob", spec.run.augment.edge_drop_prob, "edge removal probability");
  app.add_option("--labeled-fraction", spec.run.labeled_fraction, "labeled fraction for semi runs");
  app.add_flag("--self-train", spec.run.self_train.enabled, "enable contrastive self-training");
  app.add_option("--st-start-epoch", spec.run.self_train.start_epoch,
                 "warm-up epochs before self-training");
  app.add_option("--st-iterations", spec.run.self_train.iterations, "self-training rounds");
  app.add_option("--st-threshold", spec.run.self_train.threshold, "pseudo-label confidence threshold");
  app.add_option("--checkpoint-every", spec.run.checkpoint_every,
                 "save a checkpoint every N epochs (0 = final only)");
  app.add_option("--seeds,--seed", seeds_csv, "comma-separated seed list");
  app.add_option("--folds", spec.folds, "cross-validation folds");
  app.add_option("--repeats", spec.repeats, "fold-seed repeats for evaluation");
  app.add_option("--batch-sizes", batch_sizes_csv, "comma-separated sweep batch sizes");
  app.add_flag("--parallel-seeds", spec.parallel_seeds, "run seeds on separate threads");
  app.add_option("--max-degree-cap", spec.max_degree_cap, "degree one-hot cap for featureless data");

  for (const char* name : {"train-unsup", "train-semi", "self-train", "embed", "eval", "sweep"})
    app.add_subcommand(name)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!app.get_subcommands().empty())
      spec.command = igsd::parse_command(app.get_subcommands().front()->get_name());
    spec.run.encoder.kind = encoder == "gcn" ? igsd::EncoderKind::GCN : igsd::EncoderKind::GIN;
    spec.run.augment.strategy = augment == "diffuse"     ? igsd::ViewKind::Diffused
                                : augment == "identity" ? igsd::ViewKind::Identity
                                                        : igsd::ViewKind::EdgeDropped;
    spec.run.heads.predictor_hidden = spec.run.heads.projection_dim;
    if (!seeds_csv.empty()) {
      spec.seeds.clear();
      for (const std::string& tok : split_csv(seeds_csv)) spec.seeds.push_back(std::stoull(tok));
    }
    if (!batch_sizes_csv.empty()) {
      spec.sweep_batch_sizes.clear();
      for (const std::string& tok : split_csv(batch_sizes_csv))
        spec.sweep_batch_sizes.push_back(std::stoi(tok));
    }
    if (!spec.seeds.empty()) spec.run.seed = spec.seeds.front();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  }

  return igsd::run(spec);
}
