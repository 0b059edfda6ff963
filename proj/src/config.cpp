#include "marl/config.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace marl {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"experiment",
       {"algorithm", "environment", "difficulty", "seeds", "episodes", "max_env_steps",
        "eval_interval", "eval_episodes", "checkpoint_interval", "target_success", "output_dir"}},
      {"env",
       {"n_max", "p_arrive", "max_steps", "vision", "grid", "n_adversaries", "n_prey",
        "world_half_width", "adversary_max_speed", "prey_max_speed", "accel", "dt", "damping",
        "capture_radius", "capture_reward", "shaping", "prey_noise"}},
      {"model",
       {"enc_dim", "lstm_hidden", "head_hidden", "pair_hidden", "key_dim", "temperature",
        "gumbel_mode", "embed_dim", "actor_hidden"}},
      {"train",
       {"gamma", "lr", "actor_lr", "critic_lr", "entropy_coef", "baseline_coef", "batch_episodes",
        "batch_size", "update_every", "warmup_transitions", "polyak", "epsilon",
        "buffer_capacity"}},
      {"curriculum", {"schedule"}},
  };
  return k;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cf;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (!known_keys().count(section))
        throw std::invalid_argument("config: unknown section [" + section + "] at line " + std::to_string(lineno));
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
    if (section.empty())
      throw std::invalid_argument("config: key before any section at line " + std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!known_keys().at(section).count(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in section [" + section + "]");
    if (cf.data_[section].count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "' in section [" + section + "]");
    cf.data_[section][key] = value;
  }
  return cf;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key);
}

std::string ConfigFile::get_str(const std::string& section, const std::string& key,
                                const std::string& def) const {
  auto it = data_.find(section);
  if (it == data_.end()) return def;
  auto jt = it->second.find(key);
  return jt == it->second.end() ? def : jt->second;
}

double ConfigFile::get_num(const std::string& section, const std::string& key, double def) const {
  if (!has(section, key)) return def;
  const std::string& v = data_.at(section).at(key);
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (...) {
    throw std::invalid_argument("config: bad number for " + section + "." + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad number for " + section + "." + key + ": '" + v + "'");
  return out;
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int def) const {
  double v = get_num(section, key, def);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument("config: expected integer for " + section + "." + key);
  return i;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool def) const {
  if (!has(section, key)) return def;
  const std::string& v = data_.at(section).at(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: expected boolean for " + section + "." + key);
}

std::string ConfigFile::canonical() const {
  std::string out;
  for (const auto& [sec, kv] : data_) {
    out += "[" + sec + "]\n";
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  }
  return out;
}

CurriculumEntry curriculum_step(const std::vector<CurriculumEntry>& schedule, int epoch,
                                const CurriculumEntry& base) {
  CurriculumEntry cur = base;
  for (const CurriculumEntry& e : schedule) {
    if (e.epoch <= epoch) cur = e;
    else break;
  }
  return cur;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_config(ConfigFile::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& cf) {
  ExperimentConfig ec;
  ec.algorithm = cf.get_str("experiment", "algorithm", ec.algorithm);
  static const std::set<std::string> algos = {"ga-comm", "ga-ac", "ablation-soft-only",
                                             "ablation-mean-pool", "independent"};
  if (!algos.count(ec.algorithm))
    throw std::invalid_argument("config: unknown algorithm '" + ec.algorithm + "'");
  ec.environment = cf.get_str("experiment", "environment", ec.environment);
  if (ec.environment != "traffic-junction" && ec.environment != "predator-prey")
    throw std::invalid_argument("config: unknown environment '" + ec.environment + "'");
  ec.difficulty = cf.get_str("experiment", "difficulty", ec.difficulty);
  if (cf.has("experiment", "seeds")) {
    ec.seeds.clear();
    for (const std::string& s : split(cf.get_str("experiment", "seeds", ""), ','))
      if (!s.empty()) ec.seeds.push_back(std::stoi(s));
    if (ec.seeds.empty()) throw std::invalid_argument("config: empty seeds list");
  }
  ec.episodes = cf.get_int("experiment", "episodes", ec.episodes);
  if (ec.episodes < 0) throw std::invalid_argument("config: episodes must be >= 0");
  ec.max_env_steps = static_cast<long>(cf.get_num("experiment", "max_env_steps", 0));
  ec.eval_interval = cf.get_int("experiment", "eval_interval", ec.eval_interval);
  ec.eval_episodes = cf.get_int("experiment", "eval_episodes", ec.eval_episodes);
  ec.checkpoint_interval = cf.get_int("experiment", "checkpoint_interval", 0);
  ec.target_success = cf.get_num("experiment", "target_success", 0.0);
  ec.output_dir = cf.get_str("experiment", "output_dir", "");

  if (ec.environment == "traffic-junction") {
    ec.tj = TJConfig::preset(ec.difficulty);
    ec.tj.n_max = cf.get_int("env", "n_max", ec.tj.n_max);
    ec.tj.p_arrive = cf.get_num("env", "p_arrive", ec.tj.p_arrive);
    ec.tj.max_steps = cf.get_int("env", "max_steps", ec.tj.max_steps);
    ec.tj.vision = cf.get_int("env", "vision", ec.tj.vision);
    ec.tj.validate();
  } else {
    ec.pp.n_adversaries = cf.get_int("env", "n_adversaries", ec.pp.n_adversaries);
    ec.pp.n_prey = cf.get_int("env", "n_prey", ec.pp.n_prey);
    ec.pp.max_steps = cf.get_int("env", "max_steps", ec.pp.max_steps);
    ec.pp.world_half_width = cf.get_num("env", "world_half_width", ec.pp.world_half_width);
    ec.pp.adversary_max_speed = cf.get_num("env", "adversary_max_speed", ec.pp.adversary_max_speed);
    ec.pp.prey_max_speed = cf.get_num("env", "prey_max_speed", ec.pp.prey_max_speed);
    ec.pp.accel = cf.get_num("env", "accel", ec.pp.accel);
    ec.pp.dt = cf.get_num("env", "dt", ec.pp.dt);
    ec.pp.damping = cf.get_num("env", "damping", ec.pp.damping);
    ec.pp.capture_radius = cf.get_num("env", "capture_radius", ec.pp.capture_radius);
    ec.pp.capture_reward = cf.get_num("env", "capture_reward", ec.pp.capture_reward);
    ec.pp.shaping = cf.get_num("env", "shaping", ec.pp.shaping);
    ec.pp.prey_noise = cf.get_num("env", "prey_noise", ec.pp.prey_noise);
    ec.pp.validate();
  }

  AttentionConfig attn;
  attn.pair_hidden = cf.get_int("model", "pair_hidden", attn.pair_hidden);
  attn.key_dim = cf.get_int("model", "key_dim", attn.key_dim);
  attn.temperature = cf.get_num("model", "temperature", attn.temperature);
  if (attn.temperature <= 0.0) throw std::invalid_argument("config: temperature must be positive");
  std::string mode = cf.get_str("model", "gumbel_mode", "straight-through");
  if (mode == "straight-through") attn.mode = GumbelMode::StraightThrough;
  else if (mode == "relaxed") attn.mode = GumbelMode::Relaxed;
  else throw std::invalid_argument("config: unknown gumbel_mode '" + mode + "'");
  if (ec.algorithm == "ablation-soft-only") attn.aggregator = AggregatorKind::SoftOnly;
  else if (ec.algorithm == "ablation-mean-pool") attn.aggregator = AggregatorKind::MeanPool;
  else attn.aggregator = AggregatorKind::TwoStage;

  ec.comm.enc_dim = cf.get_int("model", "enc_dim", 128);
  ec.comm.lstm_hidden = cf.get_int("model", "lstm_hidden", 128);
  ec.comm.head_hidden = cf.get_int("model", "head_hidden", 64);
  ec.comm.attn = attn;
  ec.comm.gamma = cf.get_num("train", "gamma", ec.environment == "traffic-junction" ? 1.0 : 0.99);
  ec.comm.lr = cf.get_num("train", "lr", 1e-3);
  ec.comm.entropy_coef = cf.get_num("train", "entropy_coef", 0.01);
  ec.comm.baseline_coef = cf.get_num("train", "baseline_coef", 0.5);
  ec.comm.batch_episodes = cf.get_int("train", "batch_episodes", 16);

  ec.gaac.embed_dim = cf.get_int("model", "embed_dim", 64);
  ec.gaac.actor_hidden = cf.get_int("model", "actor_hidden", 64);
  ec.gaac.head_hidden = cf.get_int("model", "head_hidden", 64);
  ec.gaac.attn = attn;
  ec.gaac.gamma = cf.get_num("train", "gamma", 0.99);
  ec.gaac.actor_lr = cf.get_num("train", "actor_lr", 1e-3);
  ec.gaac.critic_lr = cf.get_num("train", "critic_lr", 1e-3);
  ec.gaac.entropy_coef = cf.get_num("train", "entropy_coef", 0.01);
  ec.gaac.polyak = cf.get_num("train", "polyak", 0.01);
  ec.gaac.buffer_capacity = cf.get_int("train", "buffer_capacity", 100000);
  ec.gaac.batch_size = cf.get_int("train", "batch_size", 256);
  ec.gaac.update_every = cf.get_int("train", "update_every", 4);
  ec.gaac.warmup_transitions = cf.get_int("train", "warmup_transitions", 1000);
  ec.gaac.epsilon = cf.get_num("train", "epsilon", 0.0);
  ec.gaac.use_attention = ec.algorithm != "independent";

  if (cf.has("curriculum", "schedule")) {
    for (const std::string& part : split(cf.get_str("curriculum", "schedule", ""), ',')) {
      if (part.empty()) continue;
      auto fields = split(part, ':');
      if (fields.size() != 3)
        throw std::invalid_argument("config: curriculum entry must be epoch:n_max:p_arrive");
      CurriculumEntry e;
      e.epoch = std::stoi(fields[0]);
      e.n_max = std::stoi(fields[1]);
      e.p_arrive = std::stod(fields[2]);
      if (!ec.curriculum.empty() && e.epoch <= ec.curriculum.back().epoch)
        throw std::invalid_argument("config: curriculum epochs must be strictly increasing");
      if (!ec.curriculum.empty() && e.n_max < ec.curriculum.back().n_max)
        throw std::invalid_argument("config: curriculum n_max must be non-decreasing");
      ec.curriculum.push_back(e);
    }
  }

  ec.config_hash = fnv1a_str(cf.canonical());
  return ec;
}

std::unique_ptr<Env> ExperimentConfig::make_env() const {
  if (environment == "traffic-junction") return std::make_unique<TrafficEnv>(tj);
  return std::make_unique<PursuitEnv>(pp);
}

TJConfig ExperimentConfig::env_at_episode(int episode) const {
  TJConfig c = tj;
  if (!curriculum.empty()) {
    CurriculumEntry base{0, tj.n_max, tj.p_arrive};
    CurriculumEntry cur = curriculum_step(curriculum, episode, base);
    c.n_max = cur.n_max;
    c.p_arrive = cur.p_arrive;
  }
  return c;
}

bool ExperimentConfig::is_comm_family() const {
  return algorithm == "ga-comm" || algorithm == "ablation-soft-only" ||
         algorithm == "ablation-mean-pool";
}

}  // namespace marl
