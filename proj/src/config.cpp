#include "rezrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rezrl {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse integer from '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number from '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string join_names(const std::vector<env::CategorySpec>& cats) {
  std::string out;
  for (const auto& c : cats) {
    if (!out.empty()) out += ",";
    out += c.name;
  }
  return out;
}

env::CategorySpec* find_category(ExperimentConfig& cfg, const std::string& name) {
  for (auto& c : cfg.tasks.categories) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

const char* to_string(PenaltyMode mode) {
  switch (mode) {
    case PenaltyMode::threshold:
      return "threshold";
    case PenaltyMode::always_resize_penalty:
      return "always_resize_penalty";
    case PenaltyMode::no_penalty:
      return "no_penalty";
  }
  return "unknown";
}

PenaltyMode penalty_mode_from_string(const std::string& s) {
  if (s == "threshold") return PenaltyMode::threshold;
  if (s == "always_resize_penalty") return PenaltyMode::always_resize_penalty;
  if (s == "no_penalty") return PenaltyMode::no_penalty;
  throw ConfigError("unknown penalty_mode: '" + s + "'");
}

std::vector<std::string> ExperimentConfig::category_names() const {
  std::vector<std::string> names;
  names.reserve(tasks.categories.size());
  for (const auto& c : tasks.categories) names.push_back(c.name);
  return names;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.tasks.categories = {
      {"ocr_like", 0.5, 0.1, 0.1, 0.9, 0.9},
      {"general", 0.5, 0.9, 0.9, 0.95, 0.95},
  };
  cfg.tasks.answers_k = cfg.policy_init.answers_k;
  cfg.policy_init.categories = static_cast<int>(cfg.tasks.categories.size());
  return cfg;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  // Dynamic per-category keys: category.<name>.<field>
  if (key.rfind("category.", 0) == 0) {
    const std::size_t dot = key.find('.', 9);
    if (dot == std::string::npos) throw ConfigError("malformed category key: '" + key + "'");
    const std::string name = key.substr(9, dot - 9);
    const std::string field = key.substr(dot + 1);
    env::CategorySpec* cat = find_category(cfg, name);
    if (!cat) throw ConfigError("unknown category '" + name + "' (set `categories` first)");
    if (field == "weight") {
      cat->weight = parse_double(key, value);
    } else if (field == "p_low") {
      cat->p_low_min = cat->p_low_max = parse_double(key, value);
    } else if (field == "p_low_min") {
      cat->p_low_min = parse_double(key, value);
    } else if (field == "p_low_max") {
      cat->p_low_max = parse_double(key, value);
    } else if (field == "p_high") {
      cat->p_high_min = cat->p_high_max = parse_double(key, value);
    } else if (field == "p_high_min") {
      cat->p_high_min = parse_double(key, value);
    } else if (field == "p_high_max") {
      cat->p_high_max = parse_double(key, value);
    } else {
      throw ConfigError("unknown category field: '" + field + "'");
    }
    return;
  }

  if (key == "categories") {
    std::vector<env::CategorySpec> cats;
    std::stringstream ss(value);
    std::string name;
    while (std::getline(ss, name, ',')) {
      name = trim(name);
      if (name.empty()) throw ConfigError("empty category name in '" + value + "'");
      cats.push_back({name, 0.0, 0.0, 0.0, 0.0, 0.0});
    }
    if (cats.empty()) throw ConfigError("categories list is empty");
    cfg.tasks.categories = std::move(cats);
    cfg.policy_init.categories = static_cast<int>(cfg.tasks.categories.size());
    return;
  }

  if (key == "steps") cfg.steps = static_cast<int>(parse_int(key, value));
  else if (key == "batch_prompts") cfg.batch_prompts = static_cast<int>(parse_int(key, value));
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "eval_prompts") cfg.eval_prompts = static_cast<int>(parse_int(key, value));
  else if (key == "metrics_path") cfg.metrics_path = value;
  else if (key == "penalty_mode") cfg.penalty_mode = penalty_mode_from_string(value);
  else if (key == "group_size") cfg.grpo.group_size = static_cast<int>(parse_int(key, value));
  else if (key == "clip_eps") cfg.grpo.clip_eps = parse_double(key, value);
  else if (key == "kl_coeff") cfg.grpo.kl_coeff = parse_double(key, value);
  else if (key == "lr") cfg.grpo.learning_rate = parse_double(key, value);
  else if (key == "std_floor") cfg.grpo.std_floor = parse_double(key, value);
  else if (key == "std_mode") {
    if (value == "population") cfg.grpo.std_mode = grpo::StdMode::population;
    else if (value == "sample") cfg.grpo.std_mode = grpo::StdMode::sample;
    else throw ConfigError("std_mode must be population or sample");
  } else if (key == "filter_duplicates") cfg.grpo.filter_duplicates = parse_bool(key, value);
  else if (key == "penalty_magnitude") cfg.penalty.magnitude = parse_double(key, value);
  else if (key == "penalty_threshold") cfg.penalty.threshold = parse_double(key, value);
  else if (key == "penalty_scope") {
    if (value == "all") cfg.penalty.scope = reward::PenaltyScope::all;
    else if (value == "correct_only") cfg.penalty.scope = reward::PenaltyScope::correct_only;
    else throw ConfigError("penalty_scope must be all or correct_only");
  } else if (key == "init_toolcall_logit") cfg.policy_init.toolcall_logit = parse_double(key, value);
  else if (key == "init_follow_hint_logit") {
    cfg.policy_init.follow_hint_logit = parse_double(key, value);
  } else if (key == "init_valid_format_logit") {
    cfg.policy_init.valid_format_logit = parse_double(key, value);
  } else if (key == "answers_k") {
    cfg.policy_init.answers_k = static_cast<int>(parse_int(key, value));
    cfg.tasks.answers_k = cfg.policy_init.answers_k;
  } else if (key == "n_img_high_min") cfg.tasks.n_img_high_min = static_cast<int>(parse_int(key, value));
  else if (key == "n_img_high_max") cfg.tasks.n_img_high_max = static_cast<int>(parse_int(key, value));
  else if (key == "cost_layers") cfg.cost.layers = static_cast<int>(parse_int(key, value));
  else if (key == "cost_hidden") cfg.cost.hidden = static_cast<int>(parse_int(key, value));
  else if (key == "cost_ffn") cfg.cost.ffn = static_cast<int>(parse_int(key, value));
  else if (key == "cost_n_sys") cfg.cost.n_sys = static_cast<int>(parse_int(key, value));
  else if (key == "cost_n_question") cfg.cost.n_question = static_cast<int>(parse_int(key, value));
  else if (key == "rollouts_per_arm") cfg.dataprep.rollouts_per_arm = static_cast<int>(parse_int(key, value));
  else if (key == "margin") cfg.dataprep.margin = static_cast<int>(parse_int(key, value));
  else if (key == "dataprep_tasks") cfg.dataprep.n_tasks = static_cast<int>(parse_int(key, value));
  else if (key == "dataprep_out") cfg.dataprep_out = value;
  else throw ConfigError("unknown config key: '" + key + "'");
}

std::string get_key(const ExperimentConfig& cfg, const std::string& key) {
  if (key.rfind("category.", 0) == 0) {
    const std::size_t dot = key.find('.', 9);
    if (dot == std::string::npos) throw ConfigError("malformed category key: '" + key + "'");
    const std::string name = key.substr(9, dot - 9);
    const std::string field = key.substr(dot + 1);
    for (const auto& c : cfg.tasks.categories) {
      if (c.name != name) continue;
      if (field == "weight") return format_double(c.weight);
      if (field == "p_low_min" || field == "p_low") return format_double(c.p_low_min);
      if (field == "p_low_max") return format_double(c.p_low_max);
      if (field == "p_high_min" || field == "p_high") return format_double(c.p_high_min);
      if (field == "p_high_max") return format_double(c.p_high_max);
      throw ConfigError("unknown category field: '" + field + "'");
    }
    throw ConfigError("unknown category '" + name + "'");
  }
  if (key == "categories") return join_names(cfg.tasks.categories);
  if (key == "steps") return std::to_string(cfg.steps);
  if (key == "batch_prompts") return std::to_string(cfg.batch_prompts);
  if (key == "seed") return std::to_string(cfg.seed);
  if (key == "eval_prompts") return std::to_string(cfg.eval_prompts);
  if (key == "metrics_path") return cfg.metrics_path;
  if (key == "penalty_mode") return to_string(cfg.penalty_mode);
  if (key == "group_size") return std::to_string(cfg.grpo.group_size);
  if (key == "clip_eps") return format_double(cfg.grpo.clip_eps);
  if (key == "kl_coeff") return format_double(cfg.grpo.kl_coeff);
  if (key == "lr") return format_double(cfg.grpo.learning_rate);
  if (key == "std_floor") return format_double(cfg.grpo.std_floor);
  if (key == "std_mode") {
    return cfg.grpo.std_mode == grpo::StdMode::population ? "population" : "sample";
  }
  if (key == "filter_duplicates") return cfg.grpo.filter_duplicates ? "true" : "false";
  if (key == "penalty_magnitude") return format_double(cfg.penalty.magnitude);
  if (key == "penalty_threshold") return format_double(cfg.penalty.threshold);
  if (key == "penalty_scope") {
    return cfg.penalty.scope == reward::PenaltyScope::all ? "all" : "correct_only";
  }
  if (key == "init_toolcall_logit") return format_double(cfg.policy_init.toolcall_logit);
  if (key == "init_follow_hint_logit") return format_double(cfg.policy_init.follow_hint_logit);
  if (key == "init_valid_format_logit") return format_double(cfg.policy_init.valid_format_logit);
  if (key == "answers_k") return std::to_string(cfg.policy_init.answers_k);
  if (key == "n_img_high_min") return std::to_string(cfg.tasks.n_img_high_min);
  if (key == "n_img_high_max") return std::to_string(cfg.tasks.n_img_high_max);
  if (key == "cost_layers") return std::to_string(cfg.cost.layers);
  if (key == "cost_hidden") return std::to_string(cfg.cost.hidden);
  if (key == "cost_ffn") return std::to_string(cfg.cost.ffn);
  if (key == "cost_n_sys") return std::to_string(cfg.cost.n_sys);
  if (key == "cost_n_question") return std::to_string(cfg.cost.n_question);
  if (key == "rollouts_per_arm") return std::to_string(cfg.dataprep.rollouts_per_arm);
  if (key == "margin") return std::to_string(cfg.dataprep.margin);
  if (key == "dataprep_tasks") return std::to_string(cfg.dataprep.n_tasks);
  if (key == "dataprep_out") return cfg.dataprep_out;
  throw ConfigError("unknown config key: '" + key + "'");
}

std::vector<std::string> known_keys(const ExperimentConfig& cfg) {
  std::vector<std::string> keys = {
      "steps", "batch_prompts", "seed", "eval_prompts", "metrics_path", "penalty_mode",
      "group_size", "clip_eps", "kl_coeff", "lr", "std_floor", "std_mode", "filter_duplicates",
      "penalty_magnitude", "penalty_threshold", "penalty_scope",
      "init_toolcall_logit", "init_follow_hint_logit", "init_valid_format_logit", "answers_k",
      "categories", "n_img_high_min", "n_img_high_max",
      "cost_layers", "cost_hidden", "cost_ffn", "cost_n_sys", "cost_n_question",
      "rollouts_per_arm", "margin", "dataprep_tasks", "dataprep_out",
  };
  for (const auto& c : cfg.tasks.categories) {
    // Shorthand point keys come first so the min/max forms can refine them.
    for (const char* field : {"weight", "p_low", "p_low_min", "p_low_max", "p_high",
                              "p_high_min", "p_high_max"}) {
      keys.push_back("category." + c.name + "." + field);
    }
  }
  return keys;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  for (const std::string& key : known_keys(cfg)) {
    std::string env_name = "REZRL_";
    for (char c : key) {
      if (c == '.') {
        env_name += "__";
      } else {
        env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      }
    }
    if (const char* value = std::getenv(env_name.c_str())) {
      set_key(cfg, key, value);
    }
  }
}

void parse_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`");
    }
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

ExperimentConfig load_config(const std::string& path, bool env_overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = default_config();
  parse_config_text(cfg, ss.str());
  if (env_overrides) apply_env_overrides(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  try {
    cfg.tasks.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("task distribution: ") + e.what());
  }
  if (cfg.steps < 1) throw ConfigError("steps must be >= 1");
  if (cfg.batch_prompts < 1) throw ConfigError("batch_prompts must be >= 1");
  if (cfg.eval_prompts < 1) throw ConfigError("eval_prompts must be >= 1");
  if (cfg.grpo.group_size < 2) throw ConfigError("group_size must be >= 2");
  if (cfg.grpo.clip_eps <= 0.0) throw ConfigError("clip_eps must be > 0");
  if (cfg.grpo.kl_coeff < 0.0) throw ConfigError("kl_coeff must be >= 0");
  if (cfg.grpo.std_floor <= 0.0) throw ConfigError("std_floor must be > 0");
  if (cfg.penalty.magnitude < 0.0) throw ConfigError("penalty_magnitude must be >= 0");
  if (cfg.penalty.threshold < 0.0 || cfg.penalty.threshold > 1.0) {
    throw ConfigError("penalty_threshold must be in [0, 1]");
  }
  if (cfg.policy_init.answers_k != cfg.tasks.answers_k) {
    throw ConfigError("answers_k mismatch between policy and task distribution");
  }
  if (cfg.policy_init.categories != static_cast<int>(cfg.tasks.categories.size())) {
    throw ConfigError("policy categories mismatch with task distribution");
  }
  if (cfg.dataprep.rollouts_per_arm < 1) throw ConfigError("rollouts_per_arm must be >= 1");
  if (cfg.dataprep.margin < 0) throw ConfigError("margin must be >= 0");
  if (cfg.dataprep.n_tasks < 1) throw ConfigError("dataprep_tasks must be >= 1");
}

}  // namespace rezrl
