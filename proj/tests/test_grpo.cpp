#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rezrl/grpo.hpp"
#include "rezrl/rng.hpp"

using namespace rezrl;
using grpo::Episode;
using grpo::GrpoConfig;
using grpo::StdMode;
using policy::Observation;
using policy::PolicyInit;
using policy::PolicyParams;
using policy::Resolution;
using policy::TurnAction;

namespace {

// Independent standardization oracle, kept deliberately plain.
std::vector<double> brute_force_standardize(const std::vector<double>& rewards, double floor,
                                            StdMode mode) {
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= mode == StdMode::population ? n : n - 1.0;
  const double denom = std::max(std::sqrt(var), floor);
  std::vector<double> out;
  for (double r : rewards) out.push_back((r - mean) / denom);
  return out;
}

GrpoConfig small_cfg(int g) {
  GrpoConfig cfg;
  cfg.group_size = g;
  cfg.clip_eps = 0.2;
  cfg.kl_coeff = 0.001;
  return cfg;
}

// A hand-built single-turn episode with one choice point of interest.
Episode direct_episode(const PolicyParams& params, const Observation& obs, int answer,
                       double reward_total) {
  Episode ep;
  ep.tokens = {policy::Vocabulary::kThinkOpen,  policy::Vocabulary::kFiller,
               policy::Vocabulary::kThinkClose, policy::Vocabulary::kAnswerOpen,
               params.vocabulary().answer_token(answer), policy::Vocabulary::kAnswerClose};
  ep.mask.assign(6, 1);
  ep.old_logprobs = policy::turn_logprobs(params, obs, ep.tokens);
  ep.ref_logprobs = ep.old_logprobs;
  ep.turns = {{obs, 0, 6}};
  ep.reward.total = reward_total;
  return ep;
}

// Random multi-turn episode group generated through the policy grammar.
std::vector<Episode> random_group(const PolicyParams& params, int g, std::mt19937_64& rng,
                                  const PolicyParams* old_params = nullptr) {
  const PolicyParams& gen = old_params ? *old_params : params;
  std::vector<Episode> group;
  for (int i = 0; i < g; ++i) {
    Episode ep;
    Observation obs1{static_cast<int>(uniform_index(rng, gen.categories())), Resolution::low,
                     static_cast<int>(uniform_index(rng, gen.answers_k())), 16, true};
    const auto turn1 = policy::generate_turn(gen, obs1, rng);
    ep.tokens = turn1.tokens;
    ep.mask.assign(6, 1);
    ep.old_logprobs = turn1.logprobs;
    ep.turns.push_back({obs1, 0, 6});

    if (turn1.action == TurnAction::tool_call) {
      // Environment-injected observation tokens, masked out.
      const int n_img = 8;
      ep.tokens.insert(ep.tokens.end(), n_img, gen.vocabulary().env_image());
      ep.mask.insert(ep.mask.end(), n_img, 0);
      ep.old_logprobs.insert(ep.old_logprobs.end(), n_img, 0.0);

      Observation obs2{obs1.category, Resolution::high,
                       static_cast<int>(uniform_index(rng, gen.answers_k())), 64, true};
      const auto turn2 = policy::generate_turn(gen, obs2, rng);
      const std::size_t begin = ep.tokens.size();
      ep.tokens.insert(ep.tokens.end(), turn2.tokens.begin(), turn2.tokens.end());
      ep.mask.insert(ep.mask.end(), 6, 1);
      ep.old_logprobs.insert(ep.old_logprobs.end(), turn2.logprobs.begin(), turn2.logprobs.end());
      ep.turns.push_back({obs2, begin, begin + 6});
    }
    ep.ref_logprobs = grpo::episode_logprobs(gen, ep);
    ep.reward.total = uniform_in(rng, 0.0, 1.5);
    group.push_back(std::move(ep));
  }
  return group;
}

PolicyParams randomized_params(std::uint64_t seed, double spread = 1.0) {
  PolicyParams params = PolicyParams::init_from(PolicyInit{});
  std::mt19937_64 rng(seed);
  for (double& v : params.flat()) v = uniform_in(rng, -spread, spread);
  return params;
}

}  // namespace

TEST_SUITE("grpo") {

TEST_CASE("advantages: identical rewards give exact zeros") {
  const std::vector<double> rewards{1.0, 1.0, 1.0, 1.0};
  for (double a : grpo::group_advantages(rewards, small_cfg(4))) CHECK(a == 0.0);

  const std::vector<double> thirds{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  for (double a : grpo::group_advantages(thirds, small_cfg(3))) CHECK(a == 0.0);
}

TEST_CASE("advantages: [0,1] standardizes to [-1,+1] under population std") {
  const auto adv = grpo::group_advantages(std::vector<double>{0.0, 1.0}, small_cfg(2));
  CHECK(adv[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(adv[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("advantages: [1.5,0,0,1.5] standardizes to [+1,-1,-1,+1]") {
  const auto adv = grpo::group_advantages(std::vector<double>{1.5, 0.0, 0.0, 1.5}, small_cfg(4));
  CHECK(adv[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(adv[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(adv[2] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(adv[3] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("advantages agree with the brute-force oracle") {
  std::mt19937_64 rng(21);
  for (StdMode mode : {StdMode::population, StdMode::sample}) {
    for (int trial = 0; trial < 500; ++trial) {
      const int g = 2 + static_cast<int>(uniform_index(rng, 15));
      std::vector<double> rewards;
      for (int i = 0; i < g; ++i) rewards.push_back(uniform_in(rng, -2.0, 2.0));
      GrpoConfig cfg = small_cfg(g);
      cfg.std_mode = mode;
      const auto got = grpo::group_advantages(rewards, cfg);
      const auto expect = brute_force_standardize(rewards, cfg.std_floor, mode);
      for (int i = 0; i < g; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("advantages: shift and positive-scale invariance") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const int g = 4 + static_cast<int>(uniform_index(rng, 8));
    std::vector<double> rewards;
    for (int i = 0; i < g; ++i) rewards.push_back(uniform_in(rng, 0.0, 1.5));
    const double shift = uniform_in(rng, -3.0, 3.0);
    const double scale = uniform_in(rng, 0.5, 4.0);

    std::vector<double> shifted = rewards;
    std::vector<double> scaled = rewards;
    for (int i = 0; i < g; ++i) {
      shifted[i] += shift;
      scaled[i] *= scale;
    }
    const GrpoConfig cfg = small_cfg(g);
    const auto base = grpo::group_advantages(rewards, cfg);
    const auto adv_shift = grpo::group_advantages(shifted, cfg);
    const auto adv_scale = grpo::group_advantages(scaled, cfg);
    for (int i = 0; i < g; ++i) {
      CHECK(adv_shift[i] == doctest::Approx(base[i]).epsilon(1e-7));
      CHECK(adv_scale[i] == doctest::Approx(base[i]).epsilon(1e-7));
    }
  }
}

TEST_CASE("advantages: normalized moments when std exceeds the floor") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int g = 8;
    std::vector<double> rewards;
    for (int i = 0; i < g; ++i) rewards.push_back(uniform_in(rng, 0.0, 1.5));
    const auto adv = grpo::group_advantages(rewards, small_cfg(g));
    double mean = 0.0;
    for (double a : adv) mean += a / g;
    CHECK(std::abs(mean) < 1e-9);
    double var = 0.0;
    for (double a : adv) var += a * a / g;  // population convention
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("advantages: length mismatch throws") {
  CHECK_THROWS_AS(grpo::group_advantages(std::vector<double>{1.0, 2.0}, small_cfg(3)),
                  std::invalid_argument);
}

TEST_CASE("kl estimator: zero at equality, positive elsewhere, exact at x=2") {
  CHECK(grpo::kl_estimate(-1.25, -1.25) == 0.0);
  CHECK(grpo::kl_estimate(std::log(2.0), 0.0) ==
        doctest::Approx(2.0 - std::log(2.0) - 1.0).epsilon(1e-12));
  CHECK(grpo::kl_estimate(std::log(2.0), 0.0) == doctest::Approx(0.30685).epsilon(1e-4));

  std::mt19937_64 rng(24);
  for (int i = 0; i < 10000; ++i) {
    const double ref = uniform_in(rng, -6.0, 0.0);
    const double cur = uniform_in(rng, -6.0, 0.0);
    CHECK(grpo::kl_estimate(ref, cur) >= 0.0);
  }
}

TEST_CASE("surrogate: on-policy start with zero advantage is exactly zero") {
  const PolicyParams params = randomized_params(31);
  std::mt19937_64 rng(32);
  auto group = random_group(params, 4, rng);
  for (auto& ep : group) ep.reward.total = 1.0;  // identical rewards -> zero advantages
  CHECK(grpo::objective_value(group, params, small_cfg(4)) == 0.0);
}

TEST_CASE("surrogate: hand-evaluated clip branches") {
  // Single episode, single masked-in choice token with p = 1.5.
  const PolicyParams params = PolicyParams::init_from(PolicyInit{});
  const Observation obs{0, Resolution::low, 1, 16, true};
  Episode ep = direct_episode(params, obs, 1, 1.0);

  // Force the ratio at the answer slot: p = exp(cur - old) = 1.5.
  ep.old_logprobs[4] -= std::log(1.5);
  for (std::size_t t = 0; t < 6; ++t) {
    if (t != 4) ep.mask[t] = 0;  // isolate the answer token
  }
  ep.ref_logprobs = grpo::episode_logprobs(params, ep);

  GrpoConfig cfg = small_cfg(1);
  cfg.kl_coeff = 0.0;
  const std::vector<std::vector<double>> cur{grpo::episode_logprobs(params, ep)};
  const std::vector<Episode> group{ep};

  CHECK(grpo::surrogate_objective(group, cur, std::vector<double>{1.0}, cfg) ==
        doctest::Approx(1.2).epsilon(1e-12));  // min(1.5, 1.2) * 1
  CHECK(grpo::surrogate_objective(group, cur, std::vector<double>{-1.0}, cfg) ==
        doctest::Approx(-1.5).epsilon(1e-12));  // min(-1.5, -1.2) = -1.5

  // Explicit reference log-probs give the same value; bad shapes throw.
  const std::vector<std::vector<double>> ref{ep.ref_logprobs};
  CHECK(grpo::surrogate_objective(group, cur, ref, std::vector<double>{1.0}, cfg) ==
        doctest::Approx(1.2).epsilon(1e-12));
  CHECK_THROWS_AS(grpo::surrogate_objective(group, cur, {}, std::vector<double>{1.0}, cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(grpo::surrogate_objective(group, cur, {{0.0, 0.0}}, std::vector<double>{1.0},
                                            cfg),
                  std::invalid_argument);
}

TEST_CASE("surrogate: clip semantics verified over a grid") {
  // min(p*A, clip(p)*A) == p*A inside the band; outside, the clipped branch
  // binds only when it lowers the objective.
  for (double eps : {0.1, 0.2, 0.3}) {
    for (double p = 0.05; p <= 2.5; p += 0.05) {
      for (double adv : {-2.0, -1.0, -0.3, 0.3, 1.0, 2.0}) {
        const double clipped = std::clamp(p, 1.0 - eps, 1.0 + eps);
        const double expect = std::min(p * adv, clipped * adv);
        if (std::abs(p - 1.0) <= eps) {
          CHECK(expect == p * adv);
        } else {
          CHECK(expect <= p * adv);
        }
      }
    }
  }
}

TEST_CASE("surrogate: masked-out perturbations change nothing, bit for bit") {
  const PolicyParams params = randomized_params(41);
  std::mt19937_64 rng(42);
  const GrpoConfig cfg = small_cfg(6);

  for (int trial = 0; trial < 100; ++trial) {
    auto group = random_group(params, 6, rng);
    std::vector<std::vector<double>> cur;
    for (const auto& ep : group) cur.push_back(grpo::episode_logprobs(params, ep));
    std::vector<double> adv;
    for (const auto& ep : group) adv.push_back(ep.reward.total - 0.7);

    const double before = grpo::surrogate_objective(group, cur, adv, cfg);

    bool perturbed = false;
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t t = 0; t < group[i].tokens.size(); ++t) {
        if (group[i].mask[t]) continue;
        cur[i][t] += uniform_in(rng, -5.0, 5.0);
        group[i].old_logprobs[t] += uniform_in(rng, -5.0, 5.0);
        group[i].ref_logprobs[t] += uniform_in(rng, -5.0, 5.0);
        perturbed = true;
      }
    }
    const double after = grpo::surrogate_objective(group, cur, adv, cfg);
    if (perturbed) CHECK(after == before);
  }
}

TEST_CASE("gradient: zero advantages and zero beta give a zero gradient") {
  const PolicyParams params = randomized_params(51);
  std::mt19937_64 rng(52);
  auto group = random_group(params, 4, rng);
  for (auto& ep : group) ep.reward.total = 0.25;
  GrpoConfig cfg = small_cfg(4);
  cfg.kl_coeff = 0.0;
  const auto grad = grpo::objective_gradient(group, params, cfg);
  for (double g : grad.data) CHECK(g == 0.0);
}

TEST_CASE("gradient: parameters not exercised by any masked-in token stay zero") {
  // Direct low-resolution episodes never touch the high-resolution features;
  // those logits must receive no gradient while the exercised ones do.
  const PolicyParams params = randomized_params(53);
  const Observation obs{0, Resolution::low, 1, 16, true};
  std::vector<Episode> group;
  group.push_back(direct_episode(params, obs, 1, 1.0));
  group.push_back(direct_episode(params, obs, 2, 0.0));
  const auto grad = grpo::objective_gradient(group, params, small_cfg(2));

  const Observation high{0, Resolution::high, 1, 16, true};
  const auto high_feat = static_cast<std::size_t>(params.feature_index(high));
  const auto low_feat = static_cast<std::size_t>(params.feature_index(obs));
  const auto f_count = static_cast<std::size_t>(params.feature_count());
  CHECK(grad.data[high_feat * 2] == 0.0);
  CHECK(grad.data[high_feat * 2 + 1] == 0.0);
  CHECK(grad.data[f_count * 2 + high_feat * 2] == 0.0);
  // The two episodes answered differently, so the answer head has signal.
  CHECK(grad.data[f_count * 2 + low_feat * 2] != 0.0);
}

TEST_CASE("gradient matches central finite differences on random instances") {
  std::mt19937_64 rng(61);
  const double h = 1e-5;
  for (int trial = 0; trial < 30; ++trial) {
    const int g = 2 + static_cast<int>(uniform_index(rng, 7));
    // Rollout under old params, evaluate under drifted params: p != 1.
    const PolicyParams old_params = randomized_params(100 + trial, 1.0);
    PolicyParams params = old_params;
    std::mt19937_64 drift(200 + trial);
    for (double& v : params.flat()) v += uniform_in(drift, -0.15, 0.15);

    GrpoConfig cfg = small_cfg(g);
    auto group = random_group(params, g, rng, &old_params);

    const auto grad = grpo::objective_gradient(group, params, cfg);
    for (std::size_t p = 0; p < params.param_count(); ++p) {
      PolicyParams plus = params;
      PolicyParams minus = params;
      plus.flat()[p] += h;
      minus.flat()[p] -= h;
      const double fd = (grpo::objective_value(group, plus, cfg) -
                         grpo::objective_value(group, minus, cfg)) /
                        (2 * h);
      CHECK(grad.data[p] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("on-policy start: ratios are 1 and KL to the initial reference is 0") {
  const PolicyParams params = randomized_params(71);
  std::mt19937_64 rng(72);
  const auto group = random_group(params, 8, rng);
  for (const auto& ep : group) {
    const auto cur = grpo::episode_logprobs(params, ep);
    for (std::size_t t = 0; t < ep.tokens.size(); ++t) {
      if (!ep.mask[t]) continue;
      CHECK(std::exp(cur[t] - ep.old_logprobs[t]) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(grpo::kl_estimate(ep.ref_logprobs[t], cur[t]) == 0.0);
    }
  }
}

TEST_CASE("update_step is exact ascent") {
  const PolicyParams params = randomized_params(81);
  policy::PolicyGrad grad(params);
  GrpoConfig cfg = small_cfg(2);

  cfg.learning_rate = 0.0;
  auto unchanged = grpo::update_step(params, grad, cfg);
  for (std::size_t i = 0; i < params.param_count(); ++i) {
    CHECK(unchanged.flat()[i] == params.flat()[i]);
  }

  std::mt19937_64 rng(82);
  for (double& gv : grad.data) gv = uniform_in(rng, -1.0, 1.0);
  cfg.learning_rate = 1.0;
  auto stepped = grpo::update_step(params, grad, cfg);
  for (std::size_t i = 0; i < params.param_count(); ++i) {
    CHECK(stepped.flat()[i] == params.flat()[i] + grad.data[i]);
  }
}

TEST_CASE("duplicate filter drops repeated token sequences, keeps degenerate groups") {
  const PolicyParams params = PolicyParams::init_from(PolicyInit{});
  const Observation obs{0, Resolution::low, 1, 16, true};
  std::vector<Episode> group;
  group.push_back(direct_episode(params, obs, 1, 1.0));
  group.push_back(direct_episode(params, obs, 1, 1.0));  // duplicate tokens
  group.push_back(direct_episode(params, obs, 2, 0.0));
  const auto keep = grpo::duplicate_filter(group);
  CHECK(keep == std::vector<std::size_t>{0, 2});

  std::vector<Episode> all_same;
  all_same.push_back(direct_episode(params, obs, 1, 1.0));
  all_same.push_back(direct_episode(params, obs, 1, 1.0));
  CHECK(grpo::duplicate_filter(all_same).size() == 2);  // nothing left to compare
}

}  // TEST_SUITE
