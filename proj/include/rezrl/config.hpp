#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rezrl/dataprep.hpp"
#include "rezrl/env.hpp"
#include "rezrl/grpo.hpp"
#include "rezrl/policy.hpp"
#include "rezrl/reward.hpp"

namespace rezrl {

enum class PenaltyMode { threshold, always_resize_penalty, no_penalty };

const char* to_string(PenaltyMode mode);
PenaltyMode penalty_mode_from_string(const std::string& s);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a run needs. Loaded from a flat key/value file (one `key = value`
// per line, `#` comments), then overridden by REZRL_* environment variables
// and finally by explicit set_key calls.
struct ExperimentConfig {
  grpo::GrpoConfig grpo;
  reward::PenaltyConfig penalty;
  PenaltyMode penalty_mode = PenaltyMode::threshold;
  env::TaskDistribution tasks;
  env::CostModelConfig cost;
  policy::PolicyInit policy_init;
  dataprep::DataprepConfig dataprep;

  int batch_prompts = 32;
  int steps = 300;
  std::uint64_t seed = 42;
  int eval_prompts = 64;  // final-policy evaluation pass for the category report
  std::string metrics_path = "metrics.jsonl";
  std::string dataprep_out = "dataset.jsonl";

  std::vector<std::string> category_names() const;
};

// Desk-scale defaults: a 50/50 ocr_like/general mix.
ExperimentConfig default_config();

// Throws ConfigError on unknown keys or unparseable values.
void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_key(const ExperimentConfig& cfg, const std::string& key);
std::vector<std::string> known_keys(const ExperimentConfig& cfg);

// Environment overrides: REZRL_<KEY> with the key upper-cased and `.`
// replaced by `__`, e.g. REZRL_STEPS, REZRL_CATEGORY__OCR_LIKE__P_LOW.
void apply_env_overrides(ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path, bool env_overrides = true);
void parse_config_text(ExperimentConfig& cfg, const std::string& text);

// Cross-field validation; throws ConfigError.
void validate(const ExperimentConfig& cfg);

}  // namespace rezrl
