#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rezrl::protocol {

// Literal tag vocabulary of the response grammar. These strings are part of
// the wire format and must not change.
inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::string_view kToolCallOpen = "<tool_call>";
inline constexpr std::string_view kToolCallClose = "</tool_call>";

// The single supported tool schema.
inline constexpr std::string_view kResizeToolName = "resize_image";
inline constexpr std::string_view kResizeActionKey = "action";
inline constexpr std::string_view kResizeActionValue = "resize";
inline constexpr std::string_view kResizeToolCallJson =
    R"({"name": "resize_image", "arguments": {"action": "resize"}})";

// Half-open byte range [begin, end) into the raw response string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct ToolCall {
  std::string name;
  std::map<std::string, std::string> arguments;
  bool operator==(const ToolCall&) const = default;
};

// True iff the call matches the resize schema exactly (case-sensitive):
// name == "resize_image" and arguments == {"action": "resize"}.
bool validate_tool_call(const ToolCall& tc);

enum class TerminalAction { none, answer, tool_call };

struct ParsedResponse {
  std::vector<Span> think_spans;          // content spans of balanced <think> pairs
  std::optional<Span> answer_span;        // content span of the first balanced <answer> pair
  std::optional<Span> tool_call_span;     // content span of the first balanced <tool_call> pair
  std::optional<ToolCall> tool_call;      // present iff tool_call_span parses as {name, arguments}
  std::optional<std::string> boxed_value; // first \boxed{...} inside the answer content
  TerminalAction terminal = TerminalAction::none;

  bool think_present = false;
  bool answer_or_toolcall_present = false;
  bool toolcall_json_valid = true;        // vacuously true without a tool_call block
  bool tags_balanced = true;

  bool well_formed() const {
    return think_present && answer_or_toolcall_present && toolcall_json_valid &&
           tags_balanced;
  }
};

// Total function: never throws, malformation is encoded in the flags.
// Tag matching is exact-literal, non-nested, first-match-wins; a stray or
// interleaved tag clears tags_balanced but parsing continues.
ParsedResponse parse_response(std::string_view raw);

// Extracts the first \boxed{...} group, tracking brace depth so nested braces
// stay inside the outermost balanced group. nullopt when absent or unbalanced.
std::optional<std::string> extract_boxed(std::string_view text);

struct Segment {
  enum class Kind { think, answer, tool_call };
  Kind kind;
  std::string content;
  std::size_t pos;  // position of the opening tag in the original string
};

// Recognized segments in document order. Text outside tags is not a segment.
std::vector<Segment> segments_of(const ParsedResponse& parsed, std::string_view raw);

// Re-serializes the recognized segments, in order, with their tags. For a
// string with no extra-tag text this reproduces the input byte for byte.
std::string reconstruct(const ParsedResponse& parsed, std::string_view raw);

}  // namespace rezrl::protocol
