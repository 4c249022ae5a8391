#include "rezrl/prompts.hpp"

namespace rezrl::prompts {
namespace {

constexpr std::string_view kAgentSystem =
    R"(You are a helpful assistant.
# Tools
You may call the function tool shown below to assist with the user query.
You are provided with the function signature within <tools></tools> XML tags:
<tools>
{
  "type": "function",
  "function": {
    "name_for_human": "resize_image",
    "name": "resize_image",
    "description": "Resize the image resolution.",
    "parameters": {
      "properties": {
        "action": {
          "description": "The action to perform. The available actions are: resize: Double the resolution of the current image. You should only use this tool if you are unable to obtain the critical information needed to answer the question from the current resolution.",
          "enum": ["resize"],
          "type": "string"
        }
      },
      "required": ["action"],
      "type": "object"
    },
    "args_format": "Format the arguments as a JSON object."
  }
}
</tools>
For each function call, return a json object with the function name and the corresponding argument within <tool_call></tool_call> XML tags:
<tool_call>
{"name": <function-name>, "arguments": <args-json-object>}
</tool_call>
)";

constexpr std::string_view kAgentUser =
    R"(Answer the question based on the image provided. You must conduct reasoning within <think> and </think> first in each of your reasoning steps. You may call ONE function tool per step to help you better solve the problem. Place the function tool within <tool_call> and </tool_call> at the end of each step to perform a function call. You should continue your reasoning process based on the content returned by the function tool. Once you confirm your final answer, place the final answer inside <answer> and </answer>. For mathematical or multiple-choice problem, wrap the answer value or choice with \boxed{}. Here is the image and question: {question}.
)";

}  // namespace

std::string_view agent_system() { return kAgentSystem; }

std::string_view agent_user_template() { return kAgentUser; }

std::string render_agent_user(std::string_view question) {
  std::string out(kAgentUser);
  constexpr std::string_view kPlaceholder = "{question}";
  if (auto pos = out.find(kPlaceholder); pos != std::string::npos) {
    out.replace(pos, kPlaceholder.size(), question);
  }
  return out;
}

}  // namespace rezrl::prompts
