#include "rezrl/runner.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rezrl/rng.hpp"

namespace rezrl::runner {
namespace {

// Seed-stream salts for the independent draws of a run.
constexpr std::uint64_t kSaltTask = 0x7461736bull;      // rollout task sampling
constexpr std::uint64_t kSaltEpisode = 0x65706973ull;   // rollout episodes
constexpr std::uint64_t kSaltEvalTask = 0x6576616cull;  // final evaluation pass
constexpr std::uint64_t kSaltEvalEp = 0x65766570ull;

std::vector<double> penalties_for_mode(const ExperimentConfig& cfg,
                                       std::span<const reward::Action> actions,
                                       std::span<const int> correct) {
  switch (cfg.penalty_mode) {
    case PenaltyMode::threshold:
      return reward::group_penalties(actions, correct, cfg.penalty);
    case PenaltyMode::always_resize_penalty: {
      // The ablation arm that penalizes every high-resolution episode
      // (or only correct ones, under scope=correct_only).
      std::vector<double> p(actions.size(), 0.0);
      for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] != reward::Action::high) continue;
        if (cfg.penalty.scope == reward::PenaltyScope::correct_only && !correct[i]) continue;
        p[i] = cfg.penalty.magnitude;
      }
      return p;
    }
    case PenaltyMode::no_penalty:
      return std::vector<double>(actions.size(), 0.0);
  }
  throw ConfigError("unhandled penalty mode");
}

double episode_kl_to_ref(const grpo::Episode& ep) {
  double sum = 0.0;
  long count = 0;
  for (std::size_t t = 0; t < ep.tokens.size(); ++t) {
    if (!ep.mask[t]) continue;
    sum += grpo::kl_estimate(ep.ref_logprobs[t], ep.old_logprobs[t]);
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

nlohmann::ordered_json row_json(const MetricsRow& row) {
  nlohmann::ordered_json j;
  j["step"] = row.step;
  j["resize_ratio"] = row.resize_ratio;
  j["accuracy"] = row.accuracy;
  j["mean_reward"] = row.mean_reward;
  j["mean_tokens"] = row.mean_tokens;
  j["mean_flops"] = row.mean_flops;
  j["kl_to_ref"] = row.kl_to_ref;
  return j;
}

}  // namespace

std::vector<CategoryStat> report_by_category(std::span<const env::EpisodeOutcome> outcomes,
                                             const std::vector<std::string>& category_names) {
  std::vector<long> episodes(category_names.size(), 0);
  std::vector<long> tool_calls(category_names.size(), 0);
  for (const auto& outcome : outcomes) {
    const auto c = static_cast<std::size_t>(outcome.category);
    if (c >= category_names.size()) continue;
    ++episodes[c];
    if (outcome.used_tool) ++tool_calls[c];
  }
  std::vector<CategoryStat> stats;
  for (std::size_t c = 0; c < category_names.size(); ++c) {
    if (episodes[c] == 0) continue;  // no data: absent, not zero
    stats.push_back({category_names[c], episodes[c], tool_calls[c],
                     static_cast<double>(tool_calls[c]) / static_cast<double>(episodes[c])});
  }
  return stats;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const int group = cfg.grpo.group_size;

  policy::PolicyParams params = policy::PolicyParams::init_from(cfg.policy_init);
  const policy::PolicyParams ref_params = params;  // frozen reference policy

  env::EnvOptions env_options;
  env_options.cost = cfg.cost;

  RunResult result{.rows = {},
                   .final_params = params,
                   .category_names = cfg.category_names(),
                   .category_report = {},
                   .eval_outcomes = {}};
  result.rows.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    const policy::PolicyParams old_params = params;  // pi_old snapshot

    policy::PolicyGrad batch_grad(params);
    double sum_resize = 0, sum_correct = 0, sum_reward = 0, sum_kl = 0;
    double sum_tokens = 0, sum_flops = 0;
    long n_episodes = 0;

    for (int p = 0; p < cfg.batch_prompts; ++p) {
      const env::TaskSpec task = env::sample_task(
          cfg.tasks, seed_stream(cfg.seed, kSaltTask, static_cast<std::uint64_t>(step),
                                 static_cast<std::uint64_t>(p)));

      std::vector<env::EpisodeOutcome> outcomes;
      outcomes.reserve(static_cast<std::size_t>(group));
      std::vector<reward::Action> actions;
      std::vector<int> correct;
      for (int g = 0; g < group; ++g) {
        const std::uint64_t ep_seed =
            seed_stream(cfg.seed, kSaltEpisode,
                        static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(cfg.batch_prompts) +
                            static_cast<std::uint64_t>(p),
                        static_cast<std::uint64_t>(g));
        outcomes.push_back(env::run_episode(task, old_params, ep_seed, env_options));
        actions.push_back(outcomes.back().episode.action);
        correct.push_back(outcomes.back().correct);
      }

      const std::vector<double> penalties = penalties_for_mode(cfg, actions, correct);
      std::vector<grpo::Episode> episodes;
      episodes.reserve(outcomes.size());
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        grpo::Episode ep = std::move(outcomes[i].episode);
        ep.reward = reward::total_reward(ep.reward.accuracy, ep.reward.format, penalties[i]);
        ep.ref_logprobs = grpo::episode_logprobs(ref_params, ep);
        episodes.push_back(std::move(ep));
      }

      std::span<const grpo::Episode> group_span(episodes);
      std::vector<grpo::Episode> filtered;
      if (cfg.grpo.filter_duplicates) {
        for (std::size_t idx : grpo::duplicate_filter(episodes)) {
          filtered.push_back(episodes[idx]);
        }
        group_span = filtered;
      }
      batch_grad.add_scaled(grpo::objective_gradient(group_span, params, cfg.grpo), 1.0);

      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        sum_resize += outcomes[i].used_tool ? 1.0 : 0.0;
        sum_correct += outcomes[i].correct;
        sum_reward += episodes[i].reward.total;
        sum_tokens += static_cast<double>(outcomes[i].tokens_consumed);
        sum_flops += outcomes[i].flops;
        sum_kl += episode_kl_to_ref(episodes[i]);
        ++n_episodes;
      }
    }

    batch_grad.scale(1.0 / static_cast<double>(cfg.batch_prompts));
    params = grpo::update_step(params, batch_grad, cfg.grpo);

    const double inv_n = 1.0 / static_cast<double>(n_episodes);
    result.rows.push_back({step, sum_resize * inv_n, sum_correct * inv_n, sum_reward * inv_n,
                           sum_tokens * inv_n, sum_flops * inv_n, sum_kl * inv_n});
  }

  // Final-policy evaluation pass for the per-category report.
  for (int p = 0; p < cfg.eval_prompts; ++p) {
    const env::TaskSpec task = env::sample_task(
        cfg.tasks, seed_stream(cfg.seed, kSaltEvalTask, static_cast<std::uint64_t>(p)));
    for (int g = 0; g < group; ++g) {
      result.eval_outcomes.push_back(env::run_episode(
          task, params,
          seed_stream(cfg.seed, kSaltEvalEp, static_cast<std::uint64_t>(p),
                      static_cast<std::uint64_t>(g)),
          env_options));
    }
  }
  result.category_report = report_by_category(result.eval_outcomes, cfg.category_names());
  result.final_params = params;
  return result;
}

void write_metrics_jsonl(const RunResult& result, std::ostream& out) {
  for (const MetricsRow& row : result.rows) out << row_json(row).dump() << '\n';
}

void write_outcomes_jsonl(const RunResult& result, std::ostream& out) {
  env::write_outcomes_jsonl(result.eval_outcomes, result.category_names, out);
}

void write_metrics_csv(const RunResult& result, std::ostream& out) {
  out << "step,resize_ratio,accuracy,mean_reward,mean_tokens,mean_flops,kl_to_ref\n";
  for (const MetricsRow& row : result.rows) {
    const auto j = row_json(row);
    out << j["step"].dump() << ',' << j["resize_ratio"].dump() << ',' << j["accuracy"].dump()
        << ',' << j["mean_reward"].dump() << ',' << j["mean_tokens"].dump() << ','
        << j["mean_flops"].dump() << ',' << j["kl_to_ref"].dump() << '\n';
  }
}

void write_report_json(const RunResult& result, std::ostream& out) {
  nlohmann::ordered_json j;
  j["categories"] = nlohmann::ordered_json::object();
  for (const CategoryStat& stat : result.category_report) {
    nlohmann::ordered_json entry;
    entry["episodes"] = stat.episodes;
    entry["tool_calls"] = stat.tool_calls;
    entry["resize_ratio"] = stat.resize_ratio;
    j["categories"][stat.category] = entry;
  }
  if (!result.rows.empty()) {
    j["final_step"] = result.rows.back().step;
    j["final_resize_ratio"] = result.rows.back().resize_ratio;
    j["final_accuracy"] = result.rows.back().accuracy;
  }
  out << j.dump(2) << '\n';
}

void write_params_json(const RunResult& result, std::ostream& out) {
  const policy::PolicyParams& p = result.final_params;
  nlohmann::ordered_json j;
  j["categories"] = p.categories();
  j["answers_k"] = p.answers_k();
  auto flat = p.flat();
  j["flat"] = std::vector<double>(flat.begin(), flat.end());
  out << j.dump(2) << '\n';
}

std::string summarize_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);

  std::vector<MetricsRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": not a JSON object");
    }
    MetricsRow row;
    row.step = j.value("step", 0);
    row.resize_ratio = j.value("resize_ratio", 0.0);
    row.accuracy = j.value("accuracy", 0.0);
    row.mean_reward = j.value("mean_reward", 0.0);
    row.mean_tokens = j.value("mean_tokens", 0.0);
    row.mean_flops = j.value("mean_flops", 0.0);
    row.kl_to_ref = j.value("kl_to_ref", 0.0);
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error(path + ": no metrics rows");

  auto tail_mean = [&](auto field) {
    const std::size_t tail = std::max<std::size_t>(1, rows.size() / 10);
    double sum = 0.0;
    for (std::size_t i = rows.size() - tail; i < rows.size(); ++i) sum += field(rows[i]);
    return sum / static_cast<double>(tail);
  };

  std::ostringstream out;
  out << "steps: " << rows.size() << "\n";
  out << "final resize_ratio: " << rows.back().resize_ratio
      << " (last-10% mean: " << tail_mean([](const MetricsRow& r) { return r.resize_ratio; })
      << ")\n";
  out << "final accuracy: " << rows.back().accuracy
      << " (last-10% mean: " << tail_mean([](const MetricsRow& r) { return r.accuracy; }) << ")\n";
  out << "final mean_reward: " << rows.back().mean_reward << "\n";
  out << "final mean_tokens: " << rows.back().mean_tokens << "\n";
  out << "final kl_to_ref: " << rows.back().kl_to_ref << "\n";
  return out.str();
}

}  // namespace rezrl::runner
