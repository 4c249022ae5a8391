#include "rezrl/env.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "rezrl/rng.hpp"

namespace rezrl::env {
namespace {

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

int draw_hint(std::mt19937_64& rng, double fidelity, int true_answer, int k) {
  if (unit_double(rng) < fidelity) return true_answer;
  // Uniform over the k-1 wrong answers.
  int j = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k - 1)));
  return j >= true_answer ? j + 1 : j;
}

void append_turn(grpo::Episode& ep, const policy::TurnSample& turn,
                 const policy::Observation& obs) {
  const std::size_t begin = ep.tokens.size();
  ep.tokens.insert(ep.tokens.end(), turn.tokens.begin(), turn.tokens.end());
  ep.mask.insert(ep.mask.end(), turn.tokens.size(), 1);
  ep.old_logprobs.insert(ep.old_logprobs.end(), turn.logprobs.begin(), turn.logprobs.end());
  ep.turns.push_back({obs, begin, ep.tokens.size()});
}

}  // namespace

void TaskDistribution::validate() const {
  if (categories.empty()) throw std::invalid_argument("task distribution has no categories");
  double total = 0.0;
  for (const auto& c : categories) {
    if (c.name.empty()) throw std::invalid_argument("category name empty");
    if (c.weight < 0.0) throw std::invalid_argument("category weight negative");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(c.p_low_min) || !in01(c.p_low_max) || !in01(c.p_high_min) || !in01(c.p_high_max) ||
        c.p_low_min > c.p_low_max || c.p_high_min > c.p_high_max) {
      throw std::invalid_argument("category fidelity ranges invalid: " + c.name);
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("category weights must sum to 1");
  if (answers_k < 2 || answers_k > 26) throw std::invalid_argument("answers_k must be in [2, 26]");
  if (n_img_high_min < 4 || n_img_high_max < n_img_high_min) {
    throw std::invalid_argument("n_img_high range invalid");
  }
}

double flops(double n, const CostModelConfig& cm) {
  const double d = cm.hidden;
  const double m = cm.ffn;
  return cm.layers * (4.0 * n * d * d + 2.0 * n * n * d + 2.0 * n * d * m);
}

TaskSpec sample_task(const TaskDistribution& dist, std::uint64_t seed) {
  dist.validate();
  std::mt19937_64 rng(seed);

  TaskSpec task;
  task.id = seed;

  const double u = unit_double(rng);
  double cum = 0.0;
  task.category = static_cast<int>(dist.categories.size()) - 1;
  for (std::size_t i = 0; i < dist.categories.size(); ++i) {
    cum += dist.categories[i].weight;
    if (u < cum) {
      task.category = static_cast<int>(i);
      break;
    }
  }
  const CategorySpec& cat = dist.categories[static_cast<std::size_t>(task.category)];

  task.true_answer = static_cast<int>(uniform_index(rng, dist.answers_k));
  task.p_low = uniform_in(rng, cat.p_low_min, cat.p_low_max);
  task.p_high = std::max(task.p_low, uniform_in(rng, cat.p_high_min, cat.p_high_max));

  // Round down to a multiple of 4 so the low-resolution quarter is integral.
  const int span = dist.n_img_high_max - dist.n_img_high_min + 1;
  int n_img = dist.n_img_high_min +
              static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(span)));
  n_img = std::max(4, (n_img / 4) * 4);
  task.n_img_high = n_img;
  return task;
}

TurnResolution resolve_turn(const protocol::ParsedResponse& parsed, std::string_view raw) {
  TurnResolution res;
  res.tool_requested = parsed.tool_call_span.has_value();
  res.tool_valid = parsed.terminal == protocol::TerminalAction::tool_call &&
                   parsed.tool_call.has_value() && protocol::validate_tool_call(*parsed.tool_call);
  if (parsed.boxed_value) {
    res.prediction = *parsed.boxed_value;
  } else if (parsed.answer_span) {
    res.prediction = trim_copy(
        raw.substr(parsed.answer_span->begin, parsed.answer_span->end - parsed.answer_span->begin));
  }
  return res;
}

EpisodeOutcome run_episode(const TaskSpec& task, const policy::PolicyParams& params,
                           std::uint64_t seed, const EnvOptions& options) {
  if (task.n_img_high < 4 || task.n_img_high % 4 != 0) {
    throw std::invalid_argument("task n_img_high must be >= 4 and divisible by 4");
  }
  const int k = params.answers_k();
  const policy::Vocabulary vocab = params.vocabulary();
  std::mt19937_64 rng(seed);

  EpisodeOutcome out;
  out.category = task.category;

  // Turn 1: downsampled input.
  policy::Observation obs1;
  obs1.category = task.category;
  obs1.resolution = policy::Resolution::low;
  obs1.hint = draw_hint(rng, task.p_low, task.true_answer, k);
  obs1.image_tokens = task.n_img_high / 4;

  policy::GenerateOptions gen1;
  if (options.forced == ForcedAction::direct) gen1.forced_action = policy::TurnAction::direct;
  if (options.forced == ForcedAction::resize) gen1.forced_action = policy::TurnAction::tool_call;
  const policy::TurnSample turn1 = policy::generate_turn(params, obs1, rng, gen1);
  append_turn(out.episode, turn1, obs1);

  std::vector<protocol::ParsedResponse> parses;
  std::vector<std::string> rendered;
  rendered.push_back(vocab.render(turn1.tokens));
  parses.push_back(protocol::parse_response(rendered.back()));

  const TurnResolution res1 = resolve_turn(parses.back(), rendered.back());
  out.used_tool = res1.tool_valid;

  std::string prediction = res1.prediction;
  if (out.used_tool) {
    // Tool response: the high-resolution observation, masked out of the loss.
    out.episode.tokens.insert(out.episode.tokens.end(), static_cast<std::size_t>(task.n_img_high),
                              vocab.env_image());
    out.episode.mask.insert(out.episode.mask.end(), static_cast<std::size_t>(task.n_img_high), 0);
    out.episode.old_logprobs.insert(out.episode.old_logprobs.end(),
                                    static_cast<std::size_t>(task.n_img_high), 0.0);

    policy::Observation obs2;
    obs2.category = task.category;
    obs2.resolution = policy::Resolution::high;
    obs2.hint = draw_hint(rng, task.p_high, task.true_answer, k);
    obs2.image_tokens = task.n_img_high;

    const policy::TurnSample turn2 = policy::generate_turn(params, obs2, rng);
    append_turn(out.episode, turn2, obs2);
    rendered.push_back(vocab.render(turn2.tokens));
    parses.push_back(protocol::parse_response(rendered.back()));
    prediction = resolve_turn(parses.back(), rendered.back()).prediction;
  }

  out.episode.action = out.used_tool ? reward::Action::high : reward::Action::direct;
  out.prediction = prediction;

  if (!prediction.empty()) {
    judge::JudgeRequest req{"task " + std::to_string(task.id),
                            policy::Vocabulary::answer_letter(task.true_answer), prediction};
    const judge::JudgeVerdict verdict =
        options.judge_fn ? options.judge_fn(req) : judge::judge_local(req);
    out.correct = verdict.score;
  }

  const double fmt = reward::format_reward(parses, out.used_tool);
  out.episode.reward = reward::total_reward(out.correct, fmt, 0.0);

  const int n_low = task.n_img_high / 4;
  out.tokens_consumed = out.used_tool ? n_low + task.n_img_high : n_low;
  const double n1 = options.cost.n_sys + n_low + options.cost.n_question;
  out.flops = flops(n1, options.cost);
  if (out.used_tool) out.flops += flops(n1 + task.n_img_high, options.cost);
  return out;
}

void write_outcomes_jsonl(std::span<const EpisodeOutcome> outcomes,
                          const std::vector<std::string>& category_names, std::ostream& out) {
  for (const EpisodeOutcome& outcome : outcomes) {
    nlohmann::ordered_json row;
    row["category"] = static_cast<std::size_t>(outcome.category) < category_names.size()
                          ? category_names[static_cast<std::size_t>(outcome.category)]
                          : std::to_string(outcome.category);
    row["action"] = outcome.used_tool ? "high" : "direct";
    row["correct"] = outcome.correct;
    row["tokens_consumed"] = outcome.tokens_consumed;
    row["flops"] = outcome.flops;
    row["prediction"] = outcome.prediction;
    row["turns"] = outcome.episode.turns.size();
    row["reward_total"] = outcome.episode.reward.total;
    out << row.dump() << '\n';
  }
}

}  // namespace rezrl::env
