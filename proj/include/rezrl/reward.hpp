#pragma once

#include <span>
#include <vector>

#include "rezrl/protocol.hpp"

namespace rezrl::reward {

// Which path produced the final answer: directly from the downsampled input,
// or after a high-resolution request.
enum class Action { direct, high };

enum class PenaltyScope {
  all,           // penalize every episode of the penalized action class
  correct_only,  // penalize only correct episodes of that class
};

struct PenaltyConfig {
  double magnitude = 0.1;
  double threshold = 0.2;  // theta in [0, 1]
  PenaltyScope scope = PenaltyScope::all;
};

struct RewardBreakdown {
  double accuracy = 0;  // {0, 1}
  double format = 0;    // {0, 0.5}
  double penalty = 0;   // {0, magnitude}
  double total = 0;     // accuracy + format - penalty, exactly
};

// All-or-nothing format score over the policy turns of one episode:
//   0.5 iff every turn has balanced think tags and valid tool-call JSON (when
//   a tool_call block appears), the final turn carries an answer tag, and a
//   tool-using episode actually contains a tool_call block; otherwise 0.
double format_reward(std::span<const protocol::ParsedResponse> turns, bool used_tool);
double format_reward(const protocol::ParsedResponse& turn, bool used_tool);

// Thresholded group penalty. With c_direct/c_high the correct-answer counts
// per action class and r = c_direct / (c_direct + c_high):
//   r <  threshold -> direct episodes penalized by magnitude,
//   r >= threshold -> high-resolution episodes penalized,
//   no correct answers at all -> no penalties.
// Scope selects whether the whole class or only its correct episodes pay.
// Throws std::invalid_argument when the spans differ in length.
std::vector<double> group_penalties(std::span<const Action> actions,
                                    std::span<const int> correct,
                                    const PenaltyConfig& cfg);

RewardBreakdown total_reward(double accuracy, double format, double penalty);

}  // namespace rezrl::reward
