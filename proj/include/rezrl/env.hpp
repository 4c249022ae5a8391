#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rezrl/grpo.hpp"
#include "rezrl/judge.hpp"
#include "rezrl/policy.hpp"
#include "rezrl/protocol.hpp"
#include "rezrl/reward.hpp"

namespace rezrl::env {

struct CategorySpec {
  std::string name;
  double weight = 0.0;
  double p_low_min = 0.0, p_low_max = 0.0;    // low-res hint fidelity range
  double p_high_min = 0.0, p_high_max = 0.0;  // high-res hint fidelity range
};

struct TaskDistribution {
  std::vector<CategorySpec> categories;
  int answers_k = 4;
  int n_img_high_min = 64;
  int n_img_high_max = 256;

  void validate() const;  // throws std::invalid_argument
};

// One synthetic VQA item. Perception is modeled as hint fidelity: the
// probability, per resolution, that the environment's perceived answer equals
// the true one.
struct TaskSpec {
  std::uint64_t id = 0;
  int category = 0;
  int true_answer = 0;
  double p_low = 0.0;
  double p_high = 0.0;
  int n_img_high = 0;  // >= 4 and divisible by 4; low resolution uses a quarter
};

struct CostModelConfig {
  int layers = 28;       // T
  int hidden = 3584;     // d
  int ffn = 18944;       // m
  int n_sys = 32;
  int n_question = 32;
};

// Total transformer FLOPs for a sequence of length n:
//   T * (4 n d^2 + 2 n^2 d + 2 n d m)
double flops(double n_total_sequence, const CostModelConfig& cm);

// Reproducible draw from the distribution.
TaskSpec sample_task(const TaskDistribution& dist, std::uint64_t seed);

struct EpisodeOutcome {
  grpo::Episode episode;
  int correct = 0;
  long tokens_consumed = 0;  // visual tokens across turns
  double flops = 0.0;
  int category = 0;
  bool used_tool = false;  // a valid resize request was executed
  std::string prediction;
};

enum class ForcedAction { none, direct, resize };

using JudgeFn = std::function<judge::JudgeVerdict(const judge::JudgeRequest&)>;

struct EnvOptions {
  CostModelConfig cost;
  ForcedAction forced = ForcedAction::none;
  JudgeFn judge_fn;  // defaults to the local oracle
};

// Runs one episode: a low-resolution turn, then, iff that turn ended in a
// valid resize call, an environment-injected observation (masked out) and a
// high-resolution turn. Correctness is judged on the final answer; malformed
// tool calls simply fail to resize and surface as format/accuracy loss.
EpisodeOutcome run_episode(const TaskSpec& task, const policy::PolicyParams& params,
                           std::uint64_t seed, const EnvOptions& options = {});

// Turn resolution logic, exposed for direct testing of malformed inputs.
struct TurnResolution {
  bool tool_requested = false;  // a tool_call block was present
  bool tool_valid = false;      // ... and it validated against the schema
  std::string prediction;       // boxed value or raw answer content, if any
};
TurnResolution resolve_turn(const protocol::ParsedResponse& parsed, std::string_view raw);

// One JSONL row per outcome.
void write_outcomes_jsonl(std::span<const EpisodeOutcome> outcomes,
                          const std::vector<std::string>& category_names, std::ostream& out);

}  // namespace rezrl::env
