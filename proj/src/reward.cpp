#include "rezrl/reward.hpp"

#include <stdexcept>

namespace rezrl::reward {

double format_reward(std::span<const protocol::ParsedResponse> turns, bool used_tool) {
  if (turns.empty()) return 0.0;
  bool has_valid_tool_block = false;
  for (const auto& turn : turns) {
    if (!turn.think_present || !turn.tags_balanced || !turn.toolcall_json_valid) return 0.0;
    if (turn.tool_call) has_valid_tool_block = true;
  }
  if (!turns.back().answer_span) return 0.0;
  if (used_tool && !has_valid_tool_block) return 0.0;
  return 0.5;
}

double format_reward(const protocol::ParsedResponse& turn, bool used_tool) {
  return format_reward(std::span<const protocol::ParsedResponse>(&turn, 1), used_tool);
}

std::vector<double> group_penalties(std::span<const Action> actions,
                                    std::span<const int> correct,
                                    const PenaltyConfig& cfg) {
  if (actions.size() != correct.size()) {
    throw std::invalid_argument("group_penalties: length mismatch");
  }
  std::vector<double> penalties(actions.size(), 0.0);
  long c_direct = 0;
  long c_high = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!correct[i]) continue;
    (actions[i] == Action::direct ? c_direct : c_high) += 1;
  }
  if (c_direct + c_high == 0) return penalties;  // r undefined: no penalty

  const double r = static_cast<double>(c_direct) / static_cast<double>(c_direct + c_high);
  const Action penalized = r < cfg.threshold ? Action::direct : Action::high;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] != penalized) continue;
    if (cfg.scope == PenaltyScope::correct_only && !correct[i]) continue;
    penalties[i] = cfg.magnitude;
  }
  return penalties;
}

RewardBreakdown total_reward(double accuracy, double format, double penalty) {
  RewardBreakdown out;
  out.accuracy = accuracy;
  out.format = format;
  out.penalty = penalty;
  out.total = accuracy + format - penalty;
  return out;
}

}  // namespace rezrl::reward
