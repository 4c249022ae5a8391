#include "rezrl/protocol.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "json.hpp"

namespace rezrl::protocol {
namespace {

enum TagIndex {
  kIdxThinkOpen = 0,
  kIdxThinkClose,
  kIdxAnswerOpen,
  kIdxAnswerClose,
  kIdxToolOpen,
  kIdxToolClose,
};

constexpr std::array<std::string_view, 6> kTagLiterals = {
    kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose, kToolCallOpen, kToolCallClose};

constexpr bool is_open_tag(int idx) { return idx % 2 == 0; }
constexpr int close_of(int idx) { return idx + 1; }

struct TagHit {
  std::size_t pos;
  int idx;
};

// Earliest occurrence of any tag literal at or after `from`. No two literals
// can match at the same position (they diverge within the first three bytes).
std::optional<TagHit> next_tag(std::string_view raw, std::size_t from) {
  TagHit best{std::string_view::npos, -1};
  for (int i = 0; i < static_cast<int>(kTagLiterals.size()); ++i) {
    std::size_t p = raw.find(kTagLiterals[i], from);
    if (p != std::string_view::npos && p < best.pos) best = {p, i};
  }
  if (best.idx < 0) return std::nullopt;
  return best;
}

bool contains_any_tag(std::string_view content) {
  return std::any_of(kTagLiterals.begin(), kTagLiterals.end(), [&](std::string_view lit) {
    return content.find(lit) != std::string_view::npos;
  });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Strict JSON parse of the tool_call content. Valid iff the trimmed content is
// a JSON object with a string "name" and an object "arguments" whose values
// are all strings.
std::optional<ToolCall> parse_tool_json(std::string_view content) {
  nlohmann::json j = nlohmann::json::parse(trim(content), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto name = j.find("name");
  auto args = j.find("arguments");
  if (name == j.end() || !name->is_string()) return std::nullopt;
  if (args == j.end() || !args->is_object()) return std::nullopt;
  ToolCall tc;
  tc.name = name->get<std::string>();
  for (const auto& [key, value] : args->items()) {
    if (!value.is_string()) return std::nullopt;
    tc.arguments.emplace(key, value.get<std::string>());
  }
  return tc;
}

}  // namespace

bool validate_tool_call(const ToolCall& tc) {
  if (tc.name != kResizeToolName) return false;
  if (tc.arguments.size() != 1) return false;
  auto it = tc.arguments.find(std::string(kResizeActionKey));
  return it != tc.arguments.end() && it->second == kResizeActionValue;
}

std::optional<std::string> extract_boxed(std::string_view text) {
  constexpr std::string_view kBoxed = "\\boxed{";
  std::size_t p = text.find(kBoxed);
  if (p == std::string_view::npos) return std::nullopt;
  std::size_t start = p + kBoxed.size();
  int depth = 1;
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      if (--depth == 0) return std::string(text.substr(start, i - start));
    }
  }
  return std::nullopt;  // unbalanced braces
}

ParsedResponse parse_response(std::string_view raw) {
  ParsedResponse out;
  std::size_t pos = 0;
  while (auto hit = next_tag(raw, pos)) {
    if (!is_open_tag(hit->idx)) {
      // Stray close tag with no matching open.
      out.tags_balanced = false;
      pos = hit->pos + kTagLiterals[hit->idx].size();
      continue;
    }
    std::string_view close_lit = kTagLiterals[close_of(hit->idx)];
    std::size_t content_begin = hit->pos + kTagLiterals[hit->idx].size();
    std::size_t close_pos = raw.find(close_lit, content_begin);
    if (close_pos == std::string_view::npos) {
      // Unclosed open tag; keep scanning after it.
      out.tags_balanced = false;
      pos = content_begin;
      continue;
    }
    Span span{content_begin, close_pos};
    if (contains_any_tag(raw.substr(span.begin, span.end - span.begin))) {
      // Nested or interleaved tag inside the content.
      out.tags_balanced = false;
    }
    switch (hit->idx) {
      case kIdxThinkOpen:
        out.think_spans.push_back(span);
        break;
      case kIdxAnswerOpen:
        if (!out.answer_span) out.answer_span = span;  // first match wins
        break;
      case kIdxToolOpen:
        if (!out.tool_call_span) out.tool_call_span = span;
        break;
      default:
        break;
    }
    pos = close_pos + close_lit.size();
  }

  out.think_present = !out.think_spans.empty();
  out.answer_or_toolcall_present = out.answer_span.has_value() || out.tool_call_span.has_value();

  if (out.tool_call_span) {
    const Span& s = *out.tool_call_span;
    out.tool_call = parse_tool_json(raw.substr(s.begin, s.end - s.begin));
    out.toolcall_json_valid = out.tool_call.has_value();
  }
  if (out.answer_span) {
    const Span& s = *out.answer_span;
    out.boxed_value = extract_boxed(raw.substr(s.begin, s.end - s.begin));
  }

  // The terminal action of the turn: a valid tool call, unless an answer tag
  // appears after it. Responses end their step with the acting structure.
  if (out.tool_call &&
      (!out.answer_span || out.tool_call_span->begin > out.answer_span->begin)) {
    out.terminal = TerminalAction::tool_call;
  } else if (out.answer_span) {
    out.terminal = TerminalAction::answer;
  }
  return out;
}

std::vector<Segment> segments_of(const ParsedResponse& parsed, std::string_view raw) {
  std::vector<Segment> segments;
  auto content = [&](const Span& s) { return std::string(raw.substr(s.begin, s.end - s.begin)); };
  for (const Span& s : parsed.think_spans) {
    segments.push_back({Segment::Kind::think, content(s), s.begin - kThinkOpen.size()});
  }
  if (parsed.answer_span) {
    segments.push_back({Segment::Kind::answer, content(*parsed.answer_span),
                        parsed.answer_span->begin - kAnswerOpen.size()});
  }
  if (parsed.tool_call_span) {
    segments.push_back({Segment::Kind::tool_call, content(*parsed.tool_call_span),
                        parsed.tool_call_span->begin - kToolCallOpen.size()});
  }
  std::sort(segments.begin(), segments.end(),
            [](const Segment& a, const Segment& b) { return a.pos < b.pos; });
  return segments;
}

std::string reconstruct(const ParsedResponse& parsed, std::string_view raw) {
  std::string out;
  for (const Segment& seg : segments_of(parsed, raw)) {
    switch (seg.kind) {
      case Segment::Kind::think:
        out.append(kThinkOpen).append(seg.content).append(kThinkClose);
        break;
      case Segment::Kind::answer:
        out.append(kAnswerOpen).append(seg.content).append(kAnswerClose);
        break;
      case Segment::Kind::tool_call:
        out.append(kToolCallOpen).append(seg.content).append(kToolCallClose);
        break;
    }
  }
  return out;
}

}  // namespace rezrl::protocol
