#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>

namespace rezrl::judge {

struct JudgeRequest {
  std::string question;
  std::string ground_truth;
  std::string prediction;
};

enum class VerdictSource { local_oracle, remote };

// Correctness is discrete by design: 0 or 1, never fractional.
struct JudgeVerdict {
  int score = 0;
  VerdictSource source = VerdictSource::local_oracle;
  bool operator==(const JudgeVerdict&) const = default;
};

// Canonical form used by the local oracle: trim, ASCII case-fold, strip a
// full \boxed{...} wrapper.
std::string normalize_answer(std::string_view text);

// Exact match on normalized strings. Stand-in for the remote judge on
// synthetic tasks whose ground truth is a canonical answer id.
JudgeVerdict judge_local(const JudgeRequest& req);

struct JudgePromptTemplate {
  std::string system;
  std::string user;  // contains {question}, {ground_truth}, {prediction}
};

// Built-in judgment prompt. The same text ships as prompts/judge_system.txt
// and prompts/judge_user.txt for external tooling.
const JudgePromptTemplate& default_judge_template();

JudgePromptTemplate load_judge_template(const std::string& system_path,
                                        const std::string& user_path);

// Substitutes the three placeholders; output is byte-identical to the template
// outside placeholder sites. Throws std::invalid_argument on empty fields.
std::pair<std::string, std::string> render_judge_prompt(
    const JudgeRequest& req, const JudgePromptTemplate& tmpl = default_judge_template());

// Scans for the last occurrence of `Score:` followed by 0 or 1 and returns
// that digit; nullopt when the pattern is absent.
std::optional<JudgeVerdict> parse_judge_reply(std::string_view text);

struct RemoteJudgeOptions {
  int max_in_flight = 4;
  int retries = 1;  // attempts = 1 + retries
  std::chrono::milliseconds timeout{5000};
};

// Backend-agnostic remote judge: prompt in, text out. The transport receives
// the per-request timeout and reports failure/timeout as nullopt. After the
// configured retries the verdict defaults to 0 so a missing judgment can
// never reward the policy. Verdicts (including defaults) are cached on the
// (question, ground_truth, prediction) triple.
class RemoteJudgeClient {
 public:
  using Transport = std::function<std::optional<std::string>(
      const std::string& system, const std::string& user, std::chrono::milliseconds timeout)>;

  explicit RemoteJudgeClient(Transport transport, RemoteJudgeOptions options = {},
                             JudgePromptTemplate tmpl = default_judge_template());

  JudgeVerdict judge(const JudgeRequest& req);
  std::size_t cache_size() const;

 private:
  std::optional<std::string> call_bounded(const std::string& system, const std::string& user);

  Transport transport_;
  RemoteJudgeOptions options_;
  JudgePromptTemplate template_;

  mutable std::shared_mutex cache_mutex_;
  std::unordered_map<std::string, JudgeVerdict> cache_;

  std::mutex inflight_mutex_;
  std::condition_variable inflight_cv_;
  int inflight_ = 0;
};

}  // namespace rezrl::judge
