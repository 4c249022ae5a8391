#include "rezrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rezrl::grpo {
namespace {

void check_episode_shape(const Episode& ep) {
  const std::size_t n = ep.tokens.size();
  if (ep.mask.size() != n || ep.old_logprobs.size() != n) {
    throw std::invalid_argument("episode token/mask/logprob shape mismatch");
  }
  std::size_t masked_in = 0;
  for (auto m : ep.mask) masked_in += m ? 1 : 0;
  if (masked_in == 0) throw std::invalid_argument("episode has no policy tokens");
}

double masked_count(const Episode& ep) {
  std::size_t m = 0;
  for (auto v : ep.mask) m += v ? 1 : 0;
  return static_cast<double>(m);
}

}  // namespace

std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& cfg) {
  if (static_cast<int>(rewards.size()) != cfg.group_size) {
    throw std::invalid_argument("group_advantages: rewards length != group_size");
  }
  const std::size_t g = rewards.size();
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) return std::vector<double>(g, 0.0);  // degenerate group

  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);

  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom_n =
      cfg.std_mode == StdMode::population ? static_cast<double>(g) : static_cast<double>(g - 1);
  const double stddev = std::sqrt(ss / denom_n);

  std::vector<double> adv(g);
  const double scale = 1.0 / std::max(stddev, cfg.std_floor);
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) * scale;
  return adv;
}

double kl_estimate(double logp_ref, double logp_cur) {
  const double d = logp_ref - logp_cur;
  return std::exp(d) - d - 1.0;
}

double surrogate_objective(std::span<const Episode> group,
                           const std::vector<std::vector<double>>& cur_logprobs,
                           const std::vector<std::vector<double>>& ref_logprobs,
                           std::span<const double> advantages, const GrpoConfig& cfg) {
  if (cur_logprobs.size() != group.size() || ref_logprobs.size() != group.size() ||
      advantages.size() != group.size()) {
    throw std::invalid_argument("surrogate_objective: group shape mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Episode& ep = group[i];
    check_episode_shape(ep);
    if (cur_logprobs[i].size() != ep.tokens.size() ||
        ref_logprobs[i].size() != ep.tokens.size()) {
      throw std::invalid_argument("surrogate_objective: logprob shape mismatch");
    }
    const double adv = advantages[i];
    const double inv_m = 1.0 / masked_count(ep);
    double ep_sum = 0.0;
    for (std::size_t t = 0; t < ep.tokens.size(); ++t) {
      if (!ep.mask[t]) continue;
      const double p = std::exp(cur_logprobs[i][t] - ep.old_logprobs[t]);
      const double clipped = std::clamp(p, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      const double surr = std::min(p * adv, clipped * adv);
      ep_sum += surr - cfg.kl_coeff * kl_estimate(ref_logprobs[i][t], cur_logprobs[i][t]);
    }
    total += inv_m * ep_sum;
  }
  return total / static_cast<double>(group.size());
}

double surrogate_objective(std::span<const Episode> group,
                           const std::vector<std::vector<double>>& cur_logprobs,
                           std::span<const double> advantages, const GrpoConfig& cfg) {
  std::vector<std::vector<double>> ref;
  ref.reserve(group.size());
  for (const Episode& ep : group) ref.push_back(ep.ref_logprobs);
  return surrogate_objective(group, cur_logprobs, ref, advantages, cfg);
}

std::vector<double> episode_logprobs(const policy::PolicyParams& params, const Episode& ep) {
  std::vector<double> out(ep.tokens.size(), 0.0);
  for (const TurnRecord& turn : ep.turns) {
    auto lp = policy::turn_logprobs(
        params, turn.obs,
        std::span<const policy::TokenId>(ep.tokens.data() + turn.begin, turn.end - turn.begin));
    std::copy(lp.begin(), lp.end(), out.begin() + static_cast<std::ptrdiff_t>(turn.begin));
  }
  return out;
}

namespace {

std::vector<double> group_rewards(std::span<const Episode> group) {
  std::vector<double> rewards;
  rewards.reserve(group.size());
  for (const Episode& ep : group) rewards.push_back(ep.reward.total);
  return rewards;
}

std::vector<double> advantages_for(std::span<const Episode> group, const GrpoConfig& cfg) {
  GrpoConfig local = cfg;
  local.group_size = static_cast<int>(group.size());
  return group_advantages(group_rewards(group), local);
}

}  // namespace

double objective_value(std::span<const Episode> group, const policy::PolicyParams& params,
                       const GrpoConfig& cfg) {
  std::vector<std::vector<double>> cur;
  cur.reserve(group.size());
  for (const Episode& ep : group) cur.push_back(episode_logprobs(params, ep));
  return surrogate_objective(group, cur, advantages_for(group, cfg), cfg);
}

policy::PolicyGrad objective_gradient(std::span<const Episode> group,
                                      const policy::PolicyParams& params, const GrpoConfig& cfg) {
  policy::PolicyGrad grad(params);
  const std::vector<double> adv = advantages_for(group, cfg);
  const double inv_g = 1.0 / static_cast<double>(group.size());

  for (std::size_t i = 0; i < group.size(); ++i) {
    const Episode& ep = group[i];
    check_episode_shape(ep);
    const std::vector<double> cur = episode_logprobs(params, ep);
    const double inv_m = 1.0 / masked_count(ep);

    // d objective / d cur_t, then chain through the policy per turn.
    std::vector<double> coeff(ep.tokens.size(), 0.0);
    for (std::size_t t = 0; t < ep.tokens.size(); ++t) {
      if (!ep.mask[t]) continue;
      const double p = std::exp(cur[t] - ep.old_logprobs[t]);
      const double clipped = std::clamp(p, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      // min() picks the unclipped branch on ties; the clipped branch has zero
      // derivative where the clamp saturates.
      const double dsurr = p * adv[i] <= clipped * adv[i] ? p * adv[i] : 0.0;
      const double x = std::exp(ep.ref_logprobs[t] - cur[t]);
      const double dkl = 1.0 - x;  // d kl / d cur
      coeff[t] = inv_g * inv_m * (dsurr - cfg.kl_coeff * dkl);
    }
    for (const TurnRecord& turn : ep.turns) {
      policy::add_turn_logprob_grad(
          params, turn.obs,
          std::span<const policy::TokenId>(ep.tokens.data() + turn.begin, turn.end - turn.begin),
          std::span<const double>(coeff.data() + turn.begin, turn.end - turn.begin), grad);
    }
  }
  return grad;
}

policy::PolicyParams update_step(const policy::PolicyParams& params,
                                 const policy::PolicyGrad& grad, const GrpoConfig& cfg) {
  if (grad.data.size() != params.param_count()) {
    throw std::invalid_argument("update_step: gradient shape mismatch");
  }
  policy::PolicyParams out = params;
  auto flat = out.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += cfg.learning_rate * grad.data[i];
  return out;
}

std::vector<std::size_t> duplicate_filter(std::span<const Episode> group) {
  std::vector<std::size_t> keep;
  keep.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    bool duplicate = false;
    for (std::size_t j : keep) {
      if (group[i].tokens == group[j].tokens) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) keep.push_back(i);
  }
  if (keep.size() < 2) {
    keep.resize(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) keep[i] = i;
  }
  return keep;
}

}  // namespace rezrl::grpo
