#include "rezrl/judge.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rezrl::judge {
namespace {

constexpr std::string_view kJudgeSystem =
    R"(You are an intelligent chatbot designed for evaluating the correctness of generative outputs for question-answer pairs.
Your task is to compare the predicted answer with the correct answer and determine if they match meaningfully. Here's how you can accomplish the task:
INSTRUCTIONS:
- Focus on the meaningful match between the predicted answer and the correct answer.
- Consider synonyms or paraphrases as valid matches.
- Evaluate the correctness of the prediction compared to the answer.
)";

constexpr std::string_view kJudgeUser =
    R"(I will give you a question related to an image and the following text as inputs:
1. **Question Related to the Image**: {question}
2. **Ground Truth Answer**: {ground_truth}
3. **Model Predicted Answer**: {prediction}
Your task is to evaluate the model's predicted answer against the ground truth answer, based on the context provided by the question related to the image. Consider the following criteria for evaluation:
- **Relevance**: Does the predicted answer directly address the question posed, considering the information provided by the given question?
- **Accuracy**: Compare the predicted answer to the ground truth answer. You need to evaluate from the following two perspectives:
(1) If the ground truth answer is open-ended, consider whether the prediction accurately reflects the information given in the ground truth without introducing factual inaccuracies. If it does, the prediction should be considered correct.
(2) If the ground truth answer is a definitive answer, strictly compare the model's prediction to the actual answer. Pay attention to unit conversions such as length and angle, etc. As long as the results are consistent, the model's prediction should be deemed correct.
**Output Format**:
Your response should include an integer score indicating the correctness of the prediction: 1 for correct and 0 for incorrect. Note that 1 means the model's prediction strictly aligns with the ground truth, while 0 means it does not.
The format should be Score: 0 or 1
)";

void replace_all(std::string& text, std::string_view placeholder, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open prompt template: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cache_key(const JudgeRequest& req) {
  std::string key;
  key.reserve(req.question.size() + req.ground_truth.size() + req.prediction.size() + 2);
  key.append(req.question).push_back('\x1f');
  key.append(req.ground_truth).push_back('\x1f');
  key.append(req.prediction);
  return key;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  std::string_view s = trim(text);
  constexpr std::string_view kBoxed = "\\boxed{";
  if (s.size() >= kBoxed.size() + 1 && s.substr(0, kBoxed.size()) == kBoxed && s.back() == '}') {
    s = trim(s.substr(kBoxed.size(), s.size() - kBoxed.size() - 1));
  }
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

JudgeVerdict judge_local(const JudgeRequest& req) {
  int score = normalize_answer(req.ground_truth) == normalize_answer(req.prediction) ? 1 : 0;
  return {score, VerdictSource::local_oracle};
}

const JudgePromptTemplate& default_judge_template() {
  static const JudgePromptTemplate tmpl{std::string(kJudgeSystem), std::string(kJudgeUser)};
  return tmpl;
}

JudgePromptTemplate load_judge_template(const std::string& system_path,
                                        const std::string& user_path) {
  return {read_file(system_path), read_file(user_path)};
}

std::pair<std::string, std::string> render_judge_prompt(const JudgeRequest& req,
                                                        const JudgePromptTemplate& tmpl) {
  if (req.question.empty() || req.ground_truth.empty() || req.prediction.empty()) {
    throw std::invalid_argument("render_judge_prompt: empty request field");
  }
  std::string user = tmpl.user;
  replace_all(user, "{question}", req.question);
  replace_all(user, "{ground_truth}", req.ground_truth);
  replace_all(user, "{prediction}", req.prediction);
  return {tmpl.system, user};
}

std::optional<JudgeVerdict> parse_judge_reply(std::string_view text) {
  constexpr std::string_view kPattern = "Score:";
  std::optional<int> last;
  std::size_t pos = 0;
  while ((pos = text.find(kPattern, pos)) != std::string_view::npos) {
    std::size_t i = pos + kPattern.size();
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i < text.size() && (text[i] == '0' || text[i] == '1')) {
      bool followed_by_digit =
          i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]));
      if (!followed_by_digit) last = text[i] - '0';
    }
    pos += kPattern.size();
  }
  if (!last) return std::nullopt;
  return JudgeVerdict{*last, VerdictSource::remote};
}

RemoteJudgeClient::RemoteJudgeClient(Transport transport, RemoteJudgeOptions options,
                                     JudgePromptTemplate tmpl)
    : transport_(std::move(transport)), options_(options), template_(std::move(tmpl)) {
  if (!transport_) throw std::invalid_argument("RemoteJudgeClient: null transport");
  if (options_.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
}

std::optional<std::string> RemoteJudgeClient::call_bounded(const std::string& system,
                                                           const std::string& user) {
  {
    std::unique_lock lock(inflight_mutex_);
    inflight_cv_.wait(lock, [&] { return inflight_ < options_.max_in_flight; });
    ++inflight_;
  }
  std::optional<std::string> reply;
  try {
    reply = transport_(system, user, options_.timeout);
  } catch (...) {
    reply = std::nullopt;
  }
  {
    std::lock_guard lock(inflight_mutex_);
    --inflight_;
  }
  inflight_cv_.notify_one();
  return reply;
}

JudgeVerdict RemoteJudgeClient::judge(const JudgeRequest& req) {
  const std::string key = cache_key(req);
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }

  auto [system, user] = render_judge_prompt(req, template_);
  JudgeVerdict verdict{0, VerdictSource::remote};
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (auto reply = call_bounded(system, user)) {
      if (auto parsed = parse_judge_reply(*reply)) {
        verdict = *parsed;
        break;
      }
    }
  }

  std::unique_lock lock(cache_mutex_);
  auto [it, inserted] = cache_.emplace(key, verdict);
  return it->second;  // first writer wins under races
}

std::size_t RemoteJudgeClient::cache_size() const {
  std::shared_lock lock(cache_mutex_);
  return cache_.size();
}

}  // namespace rezrl::judge
