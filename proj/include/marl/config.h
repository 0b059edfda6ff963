#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "marl/env_pursuit.h"
#include "marl/env_traffic.h"
#include "marl/ga_ac.h"
#include "marl/ga_comm.h"

namespace marl {

// Flat sectioned key-value config. Parsing is strict: unknown sections or
// keys, or values that fail to parse, abort before any training starts.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key, const std::string& def) const;
  double get_num(const std::string& section, const std::string& key, double def) const;
  int get_int(const std::string& section, const std::string& key, int def) const;
  bool get_bool(const std::string& section, const std::string& key, bool def) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return data_; }
  std::string canonical() const;  // sorted dump used for the config hash

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

struct CurriculumEntry {
  int epoch = 0;  // training episode index at which the entry takes effect
  int n_max = 0;
  double p_arrive = 0.0;
};

struct ExperimentConfig {
  std::string algorithm = "ga-comm";  // ga-comm | ga-ac | ablation-soft-only |
                                      // ablation-mean-pool | independent
  std::string environment = "traffic-junction";  // or predator-prey
  std::string difficulty = "easy";
  std::vector<int> seeds = {0};
  int episodes = 1000;
  long max_env_steps = 0;  // 0 = no cap
  int eval_interval = 100;
  int eval_episodes = 32;
  int checkpoint_interval = 0;  // episodes; 0 = final only
  double target_success = 0.0;  // early stop once eval success reaches this (0 disables)
  std::string output_dir;

  TJConfig tj;
  PPConfig pp;
  CommConfig comm;
  GAACConfig gaac;
  std::vector<CurriculumEntry> curriculum;

  std::uint64_t config_hash = 0;

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_config(const ConfigFile& cf);

  std::unique_ptr<Env> make_env() const;
  TJConfig env_at_episode(int episode) const;  // curriculum-adjusted traffic config
  bool is_comm_family() const;
};

// epoch lookup: last schedule entry with epoch <= current; empty -> base
CurriculumEntry curriculum_step(const std::vector<CurriculumEntry>& schedule, int epoch,
                                const CurriculumEntry& base);

}  // namespace marl
