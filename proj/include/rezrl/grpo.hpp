#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rezrl/policy.hpp"
#include "rezrl/reward.hpp"

namespace rezrl::grpo {

enum class StdMode { population, sample };

struct GrpoConfig {
  int group_size = 16;         // G
  double clip_eps = 0.2;       // epsilon
  double kl_coeff = 0.001;     // beta
  double learning_rate = 2.5;  // scaled for the log-linear policy
  double std_floor = 1e-8;
  StdMode std_mode = StdMode::population;
  bool filter_duplicates = false;  // drop token-identical episodes before advantages
};

// One policy turn inside an episode: the observation it conditioned on and the
// half-open token range it produced.
struct TurnRecord {
  policy::Observation obs;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// One multi-turn rollout. mask[t] = 0 exactly for tokens injected by the
// environment (the returned image observation); old/ref log-probs are 0 at
// those positions and never enter the objective.
struct Episode {
  std::vector<policy::TokenId> tokens;
  std::vector<std::uint8_t> mask;
  std::vector<double> old_logprobs;
  std::vector<double> ref_logprobs;
  reward::Action action = reward::Action::direct;
  reward::RewardBreakdown reward;
  std::vector<TurnRecord> turns;
};

// Group-standardized advantages: A_i = (r_i - mean) / max(std, std_floor).
// Identical-reward groups yield exactly zero. Throws std::invalid_argument
// when rewards.size() != cfg.group_size.
std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& cfg);

// k3-style estimator: with x = exp(logp_ref - logp_cur), x - log x - 1 >= 0.
double kl_estimate(double logp_ref, double logp_cur);

// Clipped surrogate with token loss masking:
//   (1/G) sum_i (1/sum_t m) sum_t m * [ min(p A, clip(p, 1-eps, 1+eps) A)
//                                       - beta * kl(ref_t, cur_t) ]
// with p = exp(cur - old). Masked-out tokens contribute nothing, including to
// the KL term. Throws std::invalid_argument on shape mismatches.
double surrogate_objective(std::span<const Episode> group,
                           const std::vector<std::vector<double>>& cur_logprobs,
                           const std::vector<std::vector<double>>& ref_logprobs,
                           std::span<const double> advantages, const GrpoConfig& cfg);

// Convenience overload using the reference log-probs recorded on each episode.
double surrogate_objective(std::span<const Episode> group,
                           const std::vector<std::vector<double>>& cur_logprobs,
                           std::span<const double> advantages, const GrpoConfig& cfg);

// Per-token log-probs of an episode under params; environment tokens get 0.
std::vector<double> episode_logprobs(const policy::PolicyParams& params, const Episode& ep);

// Surrogate objective as a function of params: current log-probs are
// recomputed through the policy and advantages from the recorded rewards.
double objective_value(std::span<const Episode> group, const policy::PolicyParams& params,
                       const GrpoConfig& cfg);

// Exact analytic gradient of objective_value with respect to every logit.
policy::PolicyGrad objective_gradient(std::span<const Episode> group,
                                      const policy::PolicyParams& params, const GrpoConfig& cfg);

// Plain ascent step: params + learning_rate * gradient.
policy::PolicyParams update_step(const policy::PolicyParams& params,
                                 const policy::PolicyGrad& grad, const GrpoConfig& cfg);

// Optional pre-advantage filter: indices of episodes to keep, dropping exact
// token duplicates after the first occurrence. Keeps everything when fewer
// than two distinct episodes remain.
std::vector<std::size_t> duplicate_filter(std::span<const Episode> group);

}  // namespace rezrl::grpo
