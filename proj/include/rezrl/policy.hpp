#pragma once

#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rezrl::policy {

using TokenId = int;

enum class Resolution { low, high };

// What the policy sees before emitting a turn. The hint is the environment's
// perceived answer at the current resolution.
struct Observation {
  int category = 0;
  Resolution resolution = Resolution::low;
  int hint = 0;          // answer id in [0, answers_k)
  int image_tokens = 0;  // visual tokens at this resolution
  bool hint_present = true;
};

// Fixed token space: structural tokens plus k answer tokens plus the
// environment's image-observation token.
struct Vocabulary {
  static constexpr TokenId kThinkOpen = 0;
  static constexpr TokenId kThinkClose = 1;
  static constexpr TokenId kAnswerOpen = 2;
  static constexpr TokenId kAnswerClose = 3;
  static constexpr TokenId kToolCallOpen = 4;
  static constexpr TokenId kToolCallClose = 5;
  static constexpr TokenId kResizeJson = 6;
  static constexpr TokenId kFiller = 7;
  static constexpr TokenId kAnswerBase = 8;

  int answers_k = 4;

  TokenId answer_token(int j) const;
  bool is_answer(TokenId t) const { return t >= kAnswerBase && t < kAnswerBase + answers_k; }
  int answer_index(TokenId t) const { return t - kAnswerBase; }
  TokenId env_image() const { return kAnswerBase + answers_k; }
  int size() const { return kAnswerBase + answers_k + 1; }

  static std::string answer_letter(int j);  // "A", "B", ...
  std::string text(TokenId t) const;
  std::string render(std::span<const TokenId> tokens) const;
};

struct PolicyInit {
  int categories = 2;
  int answers_k = 4;
  double toolcall_logit = 0.0;      // action head, tool_call column
  double follow_hint_logit = 2.0;   // answer head, follow_hint column
  double valid_format_logit = 3.0;  // format head, valid column
};

// Log-linear logits at the three grammar choice points. Feature index covers
// (category x resolution x hint-present); the format head is global.
class PolicyParams {
 public:
  PolicyParams(int categories, int answers_k);
  static PolicyParams init_from(const PolicyInit& init);

  int categories() const { return categories_; }
  int answers_k() const { return answers_k_; }
  int feature_count() const { return categories_ * 4; }
  int feature_index(const Observation& obs) const;

  // which: 0 = direct / follow_hint / valid, 1 = tool_call / uniform / broken.
  double action_logit(int feature, int which) const;
  double& action_logit(int feature, int which);
  double answer_logit(int feature, int which) const;
  double& answer_logit(int feature, int which);
  double format_logit(int which) const;
  double& format_logit(int which);

  std::size_t param_count() const { return data_.size(); }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  Vocabulary vocabulary() const { return Vocabulary{answers_k_}; }

 private:
  int categories_;
  int answers_k_;
  // Layout: action (F x 2), answer (F x 2), format (2).
  std::vector<double> data_;
};

// Gradient buffer with the same flat layout as PolicyParams.
struct PolicyGrad {
  explicit PolicyGrad(const PolicyParams& like)
      : categories(like.categories()), answers_k(like.answers_k()),
        data(like.param_count(), 0.0) {}

  int categories;
  int answers_k;
  std::vector<double> data;

  void add_scaled(const PolicyGrad& other, double scale);
  void scale(double s);
};

enum class TurnAction { direct, tool_call };

// Every policy turn is exactly six tokens:
//   think_open  filler  {think_close | filler}  {answer_open ans_j answer_close
//                                               | toolcall_open resize_json toolcall_close}
// Slot 2 is the format choice (a broken turn never closes its think block),
// slot 3 the action choice (tool_call available at low resolution only), and
// slot 4 the answer choice for answering turns. All other slots are forced by
// the grammar and carry log-probability 0.
inline constexpr int kTurnLength = 6;

struct TurnSample {
  std::vector<TokenId> tokens;
  std::vector<double> logprobs;
  TurnAction action = TurnAction::direct;
  bool valid_format = true;
};

struct GenerateOptions {
  std::optional<TurnAction> forced_action;  // overrides the action head draw
};

struct MalformedTrajectory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TurnSample generate_turn(const PolicyParams& params, const Observation& obs,
                         std::mt19937_64& rng, const GenerateOptions& options = {});

// Recomputes the log-probability of each recorded token under (possibly
// updated) params. Throws MalformedTrajectory when the tokens do not follow
// the turn grammar.
std::vector<double> turn_logprobs(const PolicyParams& params, const Observation& obs,
                                  std::span<const TokenId> tokens);

// Accumulates sum_t coeff[t] * d log pi(token_t) / d params into grad.
void add_turn_logprob_grad(const PolicyParams& params, const Observation& obs,
                           std::span<const TokenId> tokens, std::span<const double> coeff,
                           PolicyGrad& grad);

// Exposed for tests: probability of each branch at the three choice points.
double format_valid_prob(const PolicyParams& params);
double action_tool_prob(const PolicyParams& params, const Observation& obs);
double answer_token_logprob(const PolicyParams& params, const Observation& obs, int token_index);

}  // namespace rezrl::policy
