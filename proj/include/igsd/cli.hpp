#pragma once

#include <string>
#include <vector>

#include "igsd/trainer.hpp"

namespace igsd {

enum class Command { TrainUnsup, TrainSemi, SelfTrain, Embed, Eval, Sweep };

std::string command_name(Command c);
Command parse_command(const std::string& name);

/// Fully resolved experiment description: command, hyperparameters, dataset
/// location, output directory and seed list.
struct ExperimentSpec {
  Command command = Command::TrainUnsup;
  RunConfig run;
  std::string dataset = "synth";
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::string checkpoint;  // input checkpoint for embed/eval
  std::vector<std::uint64_t> seeds = {1};
  int folds = 10;
  int repeats = 5;
  std::vector<int> sweep_batch_sizes = {16, 32, 64, 128};
  bool parallel_seeds = false;
  int max_degree_cap = 64;
};

/// Load a JSON config whose keys mirror the CLI flags. Unknown keys and type
/// mismatches raise ConfigError naming the offending key (fail-closed).
ExperimentSpec load_config(const std::string& path);

/// Serialized resolved spec (the same format load_config accepts).
std::string spec_to_json(const ExperimentSpec& spec);
void save_config(const ExperimentSpec& spec, const std::string& path);

/// Resolve the dataset named in the spec: "synth" builds the planted
/// two-class benchmark, anything else parses a TU directory.
GraphDataset load_dataset(const ExperimentSpec& spec);

/// Execute the experiment, writing config echo, metrics logs, checkpoints and
/// a summary into out_dir. Returns a process exit code: 0 success, 2 config
/// error, 3 dataset not found, 1 anything else.
int run(const ExperimentSpec& spec);

}  // namespace igsd
