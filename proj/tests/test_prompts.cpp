#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rezrl/prompts.hpp"
#include "rezrl/protocol.hpp"

using namespace rezrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("agent prompt files match the built-in templates") {
  CHECK(slurp(std::string(REZRL_PROMPTS_DIR) + "/agent_system.txt") == prompts::agent_system());
  CHECK(slurp(std::string(REZRL_PROMPTS_DIR) + "/agent_user.txt") ==
        prompts::agent_user_template());
}

TEST_CASE("agent system prompt carries the exact tool schema") {
  const std::string_view system = prompts::agent_system();
  CHECK(system.find("\"name\": \"resize_image\"") != std::string::npos);
  CHECK(system.find("\"enum\": [\"resize\"]") != std::string::npos);
  CHECK(system.find("\"required\": [\"action\"]") != std::string::npos);
  CHECK(system.find("<tool_call></tool_call>") != std::string::npos);
  CHECK(system.find(protocol::kResizeToolName) != std::string::npos);
}

TEST_CASE("agent user prompt names the full tag vocabulary") {
  const std::string_view user = prompts::agent_user_template();
  for (std::string_view tag :
       {protocol::kThinkOpen, protocol::kThinkClose, protocol::kAnswerOpen,
        protocol::kAnswerClose, protocol::kToolCallOpen, protocol::kToolCallClose}) {
    CHECK(user.find(tag) != std::string_view::npos);
  }
  CHECK(user.find("\\boxed{}") != std::string_view::npos);
}

TEST_CASE("question placeholder is substituted") {
  const std::string rendered = prompts::render_agent_user("How many lights?");
  CHECK(rendered.find("How many lights?") != std::string::npos);
  CHECK(rendered.find("{question}") == std::string::npos);
}

}  // TEST_SUITE
