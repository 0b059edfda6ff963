#pragma once

#include <string>
#include <vector>

#include "marl/config.h"

namespace marl {

struct RunReport {
  std::vector<int> seeds;
  std::vector<double> per_seed_final;  // success rate (traffic) or mean reward (pursuit)
  double mean = 0.0;
  double stddev = 0.0;
  long total_env_steps = 0;
  bool completed = false;
  std::string run_dir;
};

// Executes every seed of the experiment under run_dir/seed<k>/, writing
// metrics.jsonl, checkpoints/ and a cross-seed final_report.json.
// run_dir defaults to config.output_dir, else $MARL_RUN_ROOT/run-<hash>.
RunReport run_experiment(const ExperimentConfig& config, std::string run_dir = "");

// Greedy evaluation of a saved checkpoint under the given config.
EvalStats evaluate_checkpoint(const ExperimentConfig& config, const std::string& ckpt_path,
                              int episodes, std::uint64_t seed);

// One JSONL line per step: hard matrix, combined weight matrix, entity
// positions. Episodes run greedily from the checkpointed parameters.
void export_attention(const ExperimentConfig& config, const std::string& ckpt_path,
                      const std::string& out_path, int episodes, std::uint64_t seed);

std::string default_run_root();

}  // namespace marl
