#pragma once

#include <string>
#include <string_view>

namespace rezrl::prompts {

// Agent prompt that introduces the resize tool and the <think>/<answer>/
// <tool_call> output format. Mirrors prompts/agent_system.txt and
// prompts/agent_user.txt.
std::string_view agent_system();
std::string_view agent_user_template();  // contains {question}

std::string render_agent_user(std::string_view question);

}  // namespace rezrl::prompts
