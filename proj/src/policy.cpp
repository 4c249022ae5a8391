#include "rezrl/policy.hpp"

#include <cmath>
#include <cstddef>

#include "rezrl/protocol.hpp"
#include "rezrl/rng.hpp"

namespace rezrl::policy {
namespace {

constexpr std::string_view kFillerText = "inspecting the image";

// Two-way softmax helpers. Branch 0/1 probabilities and log-probabilities.
double softmax2_prob(double logit0, double logit1, int which) {
  const double m = std::max(logit0, logit1);
  const double e0 = std::exp(logit0 - m);
  const double e1 = std::exp(logit1 - m);
  return (which == 0 ? e0 : e1) / (e0 + e1);
}

double softmax2_logprob(double logit0, double logit1, int which) {
  const double m = std::max(logit0, logit1);
  const double z = std::log(std::exp(logit0 - m) + std::exp(logit1 - m)) + m;
  return (which == 0 ? logit0 : logit1) - z;
}

void check_observation(const PolicyParams& params, const Observation& obs) {
  if (obs.category < 0 || obs.category >= params.categories()) {
    throw std::invalid_argument("observation category out of range");
  }
  if (obs.hint < 0 || obs.hint >= params.answers_k()) {
    throw std::invalid_argument("observation hint out of range");
  }
  if (obs.image_tokens <= 0) {
    throw std::invalid_argument("observation image_tokens must be positive");
  }
}

// Mixture over answer tokens: follow-hint puts all mass on the hint token,
// the uniform branch spreads 1/k everywhere.
double answer_token_prob(const PolicyParams& params, int feature, int hint, int j) {
  const double p_follow =
      softmax2_prob(params.answer_logit(feature, 0), params.answer_logit(feature, 1), 0);
  const double p_uniform = 1.0 - p_follow;
  const double base = p_uniform / static_cast<double>(params.answers_k());
  return j == hint ? p_follow + base : base;
}

}  // namespace

TokenId Vocabulary::answer_token(int j) const {
  if (j < 0 || j >= answers_k) throw std::invalid_argument("answer index out of range");
  return kAnswerBase + j;
}

std::string Vocabulary::answer_letter(int j) {
  return std::string(1, static_cast<char>('A' + j));
}

std::string Vocabulary::text(TokenId t) const {
  switch (t) {
    case kThinkOpen:
      return std::string(protocol::kThinkOpen);
    case kThinkClose:
      return std::string(protocol::kThinkClose);
    case kAnswerOpen:
      return std::string(protocol::kAnswerOpen);
    case kAnswerClose:
      return std::string(protocol::kAnswerClose);
    case kToolCallOpen:
      return std::string(protocol::kToolCallOpen);
    case kToolCallClose:
      return std::string(protocol::kToolCallClose);
    case kResizeJson:
      return std::string(protocol::kResizeToolCallJson);
    case kFiller:
      return std::string(kFillerText);
    default:
      if (is_answer(t)) return "\\boxed{" + answer_letter(answer_index(t)) + "}";
      if (t == env_image()) return "[IMG]";
      throw std::invalid_argument("unknown token id");
  }
}

std::string Vocabulary::render(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) out += text(t);
  return out;
}

PolicyParams::PolicyParams(int categories, int answers_k)
    : categories_(categories), answers_k_(answers_k) {
  if (categories < 1) throw std::invalid_argument("categories must be >= 1");
  if (answers_k < 2 || answers_k > 26) throw std::invalid_argument("answers_k must be in [2, 26]");
  data_.assign(static_cast<std::size_t>(feature_count()) * 4 + 2, 0.0);
}

PolicyParams PolicyParams::init_from(const PolicyInit& init) {
  PolicyParams p(init.categories, init.answers_k);
  for (int f = 0; f < p.feature_count(); ++f) {
    p.action_logit(f, 1) = init.toolcall_logit;
    p.answer_logit(f, 0) = init.follow_hint_logit;
  }
  p.format_logit(0) = init.valid_format_logit;
  return p;
}

int PolicyParams::feature_index(const Observation& obs) const {
  const int res = obs.resolution == Resolution::high ? 1 : 0;
  const int hint = obs.hint_present ? 1 : 0;
  return (obs.category * 2 + res) * 2 + hint;
}

double PolicyParams::action_logit(int feature, int which) const {
  return data_[static_cast<std::size_t>(feature) * 2 + which];
}
double& PolicyParams::action_logit(int feature, int which) {
  return data_[static_cast<std::size_t>(feature) * 2 + which];
}
double PolicyParams::answer_logit(int feature, int which) const {
  return data_[static_cast<std::size_t>(feature_count()) * 2 +
               static_cast<std::size_t>(feature) * 2 + which];
}
double& PolicyParams::answer_logit(int feature, int which) {
  return data_[static_cast<std::size_t>(feature_count()) * 2 +
               static_cast<std::size_t>(feature) * 2 + which];
}
double PolicyParams::format_logit(int which) const {
  return data_[static_cast<std::size_t>(feature_count()) * 4 + which];
}
double& PolicyParams::format_logit(int which) {
  return data_[static_cast<std::size_t>(feature_count()) * 4 + which];
}

void PolicyGrad::add_scaled(const PolicyGrad& other, double s) {
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += s * other.data[i];
}

void PolicyGrad::scale(double s) {
  for (double& v : data) v *= s;
}

double format_valid_prob(const PolicyParams& params) {
  return softmax2_prob(params.format_logit(0), params.format_logit(1), 0);
}

double action_tool_prob(const PolicyParams& params, const Observation& obs) {
  const int f = params.feature_index(obs);
  return softmax2_prob(params.action_logit(f, 0), params.action_logit(f, 1), 1);
}

double answer_token_logprob(const PolicyParams& params, const Observation& obs, int token_index) {
  const int f = params.feature_index(obs);
  return std::log(answer_token_prob(params, f, obs.hint, token_index));
}

TurnSample generate_turn(const PolicyParams& params, const Observation& obs,
                         std::mt19937_64& rng, const GenerateOptions& options) {
  check_observation(params, obs);
  const Vocabulary vocab = params.vocabulary();
  const int feature = params.feature_index(obs);

  TurnSample turn;
  turn.tokens.reserve(kTurnLength);
  turn.logprobs.reserve(kTurnLength);
  auto forced = [&](TokenId t) {
    turn.tokens.push_back(t);
    turn.logprobs.push_back(0.0);
  };

  forced(Vocabulary::kThinkOpen);
  forced(Vocabulary::kFiller);

  // Format choice: emit the think close tag, or break the block.
  const double p_valid = format_valid_prob(params);
  turn.valid_format = unit_double(rng) < p_valid;
  turn.tokens.push_back(turn.valid_format ? Vocabulary::kThinkClose : Vocabulary::kFiller);
  turn.logprobs.push_back(
      softmax2_logprob(params.format_logit(0), params.format_logit(1), turn.valid_format ? 0 : 1));

  // Action choice. The tool is only offered at low resolution; at high
  // resolution the grammar forces a direct answer.
  if (obs.resolution == Resolution::low) {
    bool tool;
    if (options.forced_action) {
      tool = *options.forced_action == TurnAction::tool_call;
    } else {
      tool = unit_double(rng) < action_tool_prob(params, obs);
    }
    turn.action = tool ? TurnAction::tool_call : TurnAction::direct;
    turn.tokens.push_back(tool ? Vocabulary::kToolCallOpen : Vocabulary::kAnswerOpen);
    turn.logprobs.push_back(
        softmax2_logprob(params.action_logit(feature, 0), params.action_logit(feature, 1),
                         tool ? 1 : 0));
  } else {
    turn.action = TurnAction::direct;
    forced(Vocabulary::kAnswerOpen);
  }

  if (turn.action == TurnAction::tool_call) {
    forced(Vocabulary::kResizeJson);
    forced(Vocabulary::kToolCallClose);
    return turn;
  }

  // Answer choice: sample the branch, then the token; the recorded
  // log-probability is that of the emitted token under the full mixture.
  const double p_follow =
      softmax2_prob(params.answer_logit(feature, 0), params.answer_logit(feature, 1), 0);
  int j;
  if (unit_double(rng) < p_follow) {
    j = obs.hint;
  } else {
    j = static_cast<int>(uniform_index(rng, params.answers_k()));
  }
  turn.tokens.push_back(vocab.answer_token(j));
  turn.logprobs.push_back(std::log(answer_token_prob(params, feature, obs.hint, j)));
  forced(Vocabulary::kAnswerClose);
  return turn;
}

std::vector<double> turn_logprobs(const PolicyParams& params, const Observation& obs,
                                  std::span<const TokenId> tokens) {
  check_observation(params, obs);
  if (tokens.size() != kTurnLength) throw MalformedTrajectory("turn must have 6 tokens");
  const Vocabulary vocab = params.vocabulary();
  const int feature = params.feature_index(obs);

  std::vector<double> out(kTurnLength, 0.0);
  if (tokens[0] != Vocabulary::kThinkOpen) throw MalformedTrajectory("expected <think> open");
  if (tokens[1] != Vocabulary::kFiller) throw MalformedTrajectory("expected think content");

  if (tokens[2] == Vocabulary::kThinkClose) {
    out[2] = softmax2_logprob(params.format_logit(0), params.format_logit(1), 0);
  } else if (tokens[2] == Vocabulary::kFiller) {
    out[2] = softmax2_logprob(params.format_logit(0), params.format_logit(1), 1);
  } else {
    throw MalformedTrajectory("invalid format slot");
  }

  const bool tool = tokens[3] == Vocabulary::kToolCallOpen;
  if (!tool && tokens[3] != Vocabulary::kAnswerOpen) {
    throw MalformedTrajectory("invalid action slot");
  }
  if (obs.resolution == Resolution::low) {
    out[3] = softmax2_logprob(params.action_logit(feature, 0), params.action_logit(feature, 1),
                              tool ? 1 : 0);
  } else if (tool) {
    throw MalformedTrajectory("tool call at high resolution");
  }

  if (tool) {
    if (tokens[4] != Vocabulary::kResizeJson || tokens[5] != Vocabulary::kToolCallClose) {
      throw MalformedTrajectory("invalid tool call body");
    }
  } else {
    if (!vocab.is_answer(tokens[4]) || tokens[5] != Vocabulary::kAnswerClose) {
      throw MalformedTrajectory("invalid answer body");
    }
    out[4] = std::log(answer_token_prob(params, feature, obs.hint, vocab.answer_index(tokens[4])));
  }
  return out;
}

void add_turn_logprob_grad(const PolicyParams& params, const Observation& obs,
                           std::span<const TokenId> tokens, std::span<const double> coeff,
                           PolicyGrad& grad) {
  if (coeff.size() != tokens.size()) throw std::invalid_argument("coeff/token size mismatch");
  turn_logprobs(params, obs, tokens);  // validates the trajectory
  const Vocabulary vocab = params.vocabulary();
  const int feature = params.feature_index(obs);
  const int k = params.answers_k();
  const std::size_t fmt_base = static_cast<std::size_t>(params.feature_count()) * 4;
  const std::size_t act_base = static_cast<std::size_t>(feature) * 2;
  const std::size_t ans_base = static_cast<std::size_t>(params.feature_count()) * 2 +
                               static_cast<std::size_t>(feature) * 2;

  // Format slot: d log p(branch i) / d logit_j = delta_ij - p_j.
  {
    const double p0 = format_valid_prob(params);
    const int branch = tokens[2] == Vocabulary::kThinkClose ? 0 : 1;
    grad.data[fmt_base + 0] += coeff[2] * ((branch == 0 ? 1.0 : 0.0) - p0);
    grad.data[fmt_base + 1] += coeff[2] * ((branch == 1 ? 1.0 : 0.0) - (1.0 - p0));
  }

  const bool tool = tokens[3] == Vocabulary::kToolCallOpen;
  if (obs.resolution == Resolution::low) {
    const double p_tool = action_tool_prob(params, obs);
    const int branch = tool ? 1 : 0;
    grad.data[act_base + 0] += coeff[3] * ((branch == 0 ? 1.0 : 0.0) - (1.0 - p_tool));
    grad.data[act_base + 1] += coeff[3] * ((branch == 1 ? 1.0 : 0.0) - p_tool);
  }

  if (!tool) {
    // Mixture token: P(j) = p_f * [j == hint] + (1 - p_f) / k with
    // (p_f, p_u) = softmax(answer logits). Chain rule through the softmax.
    const double p_f =
        softmax2_prob(params.answer_logit(feature, 0), params.answer_logit(feature, 1), 0);
    const double p_u = 1.0 - p_f;
    const int j = vocab.answer_index(tokens[4]);
    const double hit = j == obs.hint ? 1.0 : 0.0;
    const double prob = answer_token_prob(params, feature, obs.hint, j);
    const double dprob_dlf = p_f * (hit * (1.0 - p_f) - p_u / k);
    const double dprob_dlu = p_u * ((1.0 - p_u) / k - hit * p_f);
    grad.data[ans_base + 0] += coeff[4] * dprob_dlf / prob;
    grad.data[ans_base + 1] += coeff[4] * dprob_dlu / prob;
  }
}

}  // namespace rezrl::policy
