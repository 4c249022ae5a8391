#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "rezrl/env.hpp"
#include "rezrl/policy.hpp"

namespace rezrl::dataprep {

struct RolloutRecord {
  std::uint64_t task_id = 0;
  int correct_low = 0;
  int correct_high = 0;
  int rollouts_per_arm = 8;
};

enum class SampleClass { low_res_solvable, high_res_required, discarded };

struct DataprepConfig {
  int rollouts_per_arm = 8;
  int margin = 6;
  int n_tasks = 200;
};

struct InsufficientSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Classification rules, checked in order:
//   low_res_solvable  iff both arms are perfect (all rollouts correct),
//   high_res_required iff correct_high - correct_low >= margin,
//   discarded otherwise.
// Throws std::invalid_argument when a count exceeds rollouts_per_arm.
SampleClass classify(const RolloutRecord& rec, int margin = 6);

const char* to_string(SampleClass cls);

struct LabeledTask {
  env::TaskSpec task;
  SampleClass cls = SampleClass::discarded;
  RolloutRecord record;
};

// Runs rollouts_per_arm forced-direct and forced-resize episodes per task,
// classifies each record, and returns a balanced set: equal counts of the two
// kept classes (the larger class is truncated in task order). Throws
// InsufficientSamples when either kept class is empty.
std::vector<LabeledTask> build_training_set(std::span<const env::TaskSpec> tasks,
                                            const policy::PolicyParams& params,
                                            const DataprepConfig& cfg,
                                            const env::EnvOptions& env_options,
                                            std::uint64_t seed);

void write_jsonl(std::span<const LabeledTask> set, const std::vector<std::string>& category_names,
                 std::ostream& out);

}  // namespace rezrl::dataprep
