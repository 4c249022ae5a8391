#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rezrl/config.hpp"
#include "rezrl/env.hpp"

namespace rezrl::runner {

struct MetricsRow {
  int step = 0;
  double resize_ratio = 0.0;  // fraction of episodes ending in a valid tool call
  double accuracy = 0.0;
  double mean_reward = 0.0;   // mean total reward, penalty included
  double mean_tokens = 0.0;
  double mean_flops = 0.0;
  double kl_to_ref = 0.0;     // mean over masked-in tokens, at rollout time
};

struct CategoryStat {
  std::string category;
  long episodes = 0;
  long tool_calls = 0;
  double resize_ratio = 0.0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  policy::PolicyParams final_params;
  std::vector<std::string> category_names;
  std::vector<CategoryStat> category_report;           // final-policy evaluation pass
  std::vector<env::EpisodeOutcome> eval_outcomes;      // the episodes behind the report
};

void write_outcomes_jsonl(const RunResult& result, std::ostream& out);

// The full training loop: per step, snapshot the policy, sample
// batch_prompts tasks, roll out group_size episodes each, score them under
// the configured penalty mode, and take one ascent step on the batch-mean
// objective. Fully deterministic given cfg.seed.
RunResult run_experiment(const ExperimentConfig& cfg);

// Per-category resize ratios over a set of outcomes. Categories with no
// episodes are omitted, not reported as zero.
std::vector<CategoryStat> report_by_category(std::span<const env::EpisodeOutcome> outcomes,
                                             const std::vector<std::string>& category_names);

void write_metrics_jsonl(const RunResult& result, std::ostream& out);
void write_metrics_csv(const RunResult& result, std::ostream& out);
void write_report_json(const RunResult& result, std::ostream& out);
void write_params_json(const RunResult& result, std::ostream& out);

// Reads a metrics JSONL file and renders a short human-readable summary.
// Throws std::runtime_error on malformed input.
std::string summarize_metrics_file(const std::string& path);

}  // namespace rezrl::runner
