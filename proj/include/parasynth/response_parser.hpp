#pragma once

// Turns raw completions into candidate sentences. List markers, quotes,
// preambles and label lines are stripped; counts are reconciled against what
// the prompt asked for and every deviation becomes a warning.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parasynth/corpus_io.hpp"
#include "parasynth/errors.hpp"
#include "parasynth/text.hpp"

namespace parasynth {

struct StoryPair {
  std::string source;
  std::string target;

  bool operator==(const StoryPair&) const = default;
};

struct ParsedReply {
  std::vector<std::string> items;      // paraphrase / multi-target variants
  std::vector<StoryPair> story_pairs;  // storytelling
  std::vector<std::string> warnings;
};

namespace detail {

// Length of a leading "1." / "1)" / "-" / "*" / "•" marker including the
// whitespace after it, or 0.
inline std::size_t list_marker_length(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i < 4 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
    ++i;
  } else if (line.starts_with("-") || line.starts_with("*")) {
    i = 1;
  } else if (line.starts_with("•")) {
    i = 3;
  } else {
    return 0;
  }
  if (i == line.size()) return i;
  const std::size_t body = line.size() - text::trim_view(line.substr(i)).size();
  // The marker must be followed by whitespace; "10.000 Dollar" is not a list item.
  return body > i ? body : 0;
}

inline std::string_view strip_quotes(std::string_view s) {
  static constexpr std::pair<std::string_view, std::string_view> quotes[] = {
      {"\"", "\""}, {"'", "'"}, {"“", "”"}, {"„", "“"}, {"«", "»"},
      {"「", "」"}, {"‘", "’"}, {"`", "`"}};
  for (;;) {
    bool stripped = false;
    for (auto [open, close] : quotes) {
      if (s.size() >= open.size() + close.size() + 1 && s.starts_with(open) && s.ends_with(close)) {
        s = text::trim_view(s.substr(open.size(), s.size() - open.size() - close.size()));
        stripped = true;
        break;
      }
    }
    if (!stripped) return s;
  }
}

struct ReplyLine {
  std::string_view body;
  bool marked = false;
};

inline ReplyLine clean_line(std::string_view raw_line) {
  std::string_view line = text::trim_view(raw_line);
  ReplyLine out;
  if (const auto m = list_marker_length(line); m > 0) {
    out.marked = true;
    line = line.substr(m);
  }
  out.body = strip_quotes(text::trim_view(line));
  return out;
}

/// False for lines made only of punctuation and spaces.
inline bool has_text(std::string_view body) {
  for (char32_t cp : text::code_points(body))
    if (!text::is_punct(cp) && !text::is_space(cp)) return true;
  return false;
}

// "Korean story:", "---", "Translation (German):" and similar headings.
inline bool is_separator_line(std::string_view body) {
  return body.ends_with(":") || body.ends_with("：") || !has_text(body);
}

}  // namespace detail

inline ParsedReply parse_variants(std::string_view raw, int expected_n) {
  if (text::trim_view(raw).empty()) throw ParseError("empty reply", std::string(raw));
  std::vector<detail::ReplyLine> lines;
  bool any_marked = false;
  for (std::string_view l : text::split_lines(raw)) {
    auto cleaned = detail::clean_line(l);
    if (!detail::has_text(cleaned.body)) continue;
    any_marked = any_marked || cleaned.marked;
    lines.push_back(cleaned);
  }

  ParsedReply reply;
  for (const auto& l : lines)
    if (!any_marked || l.marked) reply.items.emplace_back(l.body);
  if (reply.items.empty()) throw ParseError("no sentences found in reply", std::string(raw));

  const auto found = reply.items.size();
  if (expected_n > 0 && found != static_cast<std::size_t>(expected_n)) {
    reply.warnings.push_back("expected " + std::to_string(expected_n) + " items, found " + std::to_string(found));
    if (found > static_cast<std::size_t>(expected_n)) reply.items.resize(static_cast<std::size_t>(expected_n));
  }
  return reply;
}

/// Recognizes interleaved (source line, translation line, ...) replies when
/// consecutive lines alternate between two scripts, and otherwise a block
/// layout: story lines, a separator, then translation lines.
inline ParsedReply parse_story(std::string_view raw, int expected_k) {
  if (text::trim_view(raw).empty()) throw ParseError("empty reply", std::string(raw));

  std::vector<std::vector<std::string_view>> groups(1);
  std::vector<std::string_view> content;
  for (std::string_view l : text::split_lines(raw)) {
    const auto cleaned = detail::clean_line(l);
    if (detail::is_separator_line(cleaned.body)) {
      if (!groups.back().empty()) groups.emplace_back();
      continue;
    }
    groups.back().push_back(cleaned.body);
    content.push_back(cleaned.body);
  }
  if (groups.back().empty()) groups.pop_back();

  std::vector<std::string_view> sources;
  std::vector<std::string_view> targets;

  bool interleaved = content.size() >= 2;
  if (interleaved) {
    const UScriptCode a = text::dominant_script(content[0]);
    const UScriptCode b = text::dominant_script(content[1]);
    interleaved = a != b && a != USCRIPT_COMMON && b != USCRIPT_COMMON;
    for (std::size_t i = 2; interleaved && i < content.size(); ++i)
      interleaved = text::dominant_script(content[i]) == (i % 2 == 0 ? a : b);
  }

  if (interleaved) {
    for (std::size_t i = 0; i < content.size(); ++i) (i % 2 == 0 ? sources : targets).push_back(content[i]);
  } else if (groups.size() == 2) {
    sources = groups[0];
    targets = groups[1];
  } else {
    const std::size_t half = (content.size() + 1) / 2;
    sources.assign(content.begin(), content.begin() + static_cast<std::ptrdiff_t>(half));
    targets.assign(content.begin() + static_cast<std::ptrdiff_t>(half), content.end());
  }

  ParsedReply reply;
  const std::size_t matched = std::min(sources.size(), targets.size());
  if (matched == 0) throw ParseError("no story/translation pairs found in reply", std::string(raw));
  for (std::size_t i = 0; i < matched; ++i) reply.story_pairs.push_back({std::string(sources[i]), std::string(targets[i])});

  if (sources.size() != targets.size() || (expected_k > 0 && matched != static_cast<std::size_t>(expected_k))) {
    reply.warnings.push_back("expected " + std::to_string(expected_k > 0 ? expected_k : static_cast<int>(sources.size())) +
                             " pairs, matched " + std::to_string(matched));
  }
  if (expected_k > 0 && matched > static_cast<std::size_t>(expected_k))
    reply.story_pairs.resize(static_cast<std::size_t>(expected_k));
  return reply;
}

/// A completion that could not be used, kept for inspection.
struct Reject {
  std::string pair_id;
  std::string strategy;
  std::string raw_text;
  std::string reason;
};

inline std::string serialize_rejects(const std::vector<Reject>& rejects) {
  std::string out;
  for (const auto& r : rejects) {
    ordered_json j;
    j["pair_id"] = r.pair_id;
    j["strategy"] = r.strategy;
    j["raw_text"] = r.raw_text;
    j["reason"] = r.reason;
    out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

inline void write_rejects(const std::vector<Reject>& rejects, const std::filesystem::path& path) {
  detail::write_file(path, serialize_rejects(rejects));
}

}  // namespace parasynth
