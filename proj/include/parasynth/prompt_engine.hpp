#pragma once

#include <array>
#include <string>
#include <string_view>

#include "parasynth/corpus_io.hpp"
#include "parasynth/errors.hpp"

namespace parasynth {

enum class StrategyKind { paraphrase_src, paraphrase_tgt, multi_target, storytelling };

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::paraphrase_src: return "paraphrase_src";
    case StrategyKind::paraphrase_tgt: return "paraphrase_tgt";
    case StrategyKind::multi_target: return "multi_target";
    case StrategyKind::storytelling: return "storytelling";
  }
  throw PromptError("unknown strategy kind");
}

inline StrategyKind strategy_kind_from_string(std::string_view s) {
  for (auto k : {StrategyKind::paraphrase_src, StrategyKind::paraphrase_tgt, StrategyKind::multi_target,
                 StrategyKind::storytelling})
    if (to_string(k) == s) return k;
  throw PromptError("unknown strategy kind '" + std::string(s) + "'");
}

/// One prompt template and its count parameter: variants per side,
/// translations, or story sentences.
struct Strategy {
  StrategyKind kind = StrategyKind::paraphrase_src;
  int n = 1;

  bool operator==(const Strategy&) const = default;
};

inline constexpr int kDefaultStorySentences = 3;

struct PromptText {
  std::string text;
  Strategy strategy;
  std::string pair_id;
};

namespace detail {

inline std::string count_word(int n) {
  static constexpr std::array<std::string_view, 11> words = {
      "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  if (n >= 0 && n <= 10) return std::string(words[static_cast<std::size_t>(n)]);
  return std::to_string(n);
}

inline std::string ways(int n) { return std::to_string(n) + (n == 1 ? " unique way." : " unique ways."); }

inline std::string fill_template(Strategy strategy, std::string_view src_sentence, std::string_view tgt_sentence,
                                 std::string_view src_language, std::string_view tgt_language) {
  if (strategy.n < 1) throw PromptError("strategy count must be at least 1, got " + std::to_string(strategy.n));
  std::string out;
  switch (strategy.kind) {
    case StrategyKind::paraphrase_src:
      out.append(src_sentence).append("\nParaphrase the above sentence in ").append(src_language);
      out.append(" in ").append(ways(strategy.n));
      return out;
    case StrategyKind::paraphrase_tgt:
      out.append(tgt_sentence).append("\nParaphrase the above sentence in ").append(tgt_language);
      out.append(" in ").append(ways(strategy.n));
      return out;
    case StrategyKind::multi_target:
      out.append(src_sentence).append("\nTranslate the above sentence to ").append(tgt_language);
      out.append(" in ").append(ways(strategy.n));
      return out;
    case StrategyKind::storytelling:
      out.append(src_sentence).append("\nWrite a ").append(count_word(strategy.n)).append("-sentence ");
      out.append(src_language).append(" story based on the above sentence, and translate each sentence into ");
      out.append(tgt_language).append(".");
      return out;
  }
  throw PromptError("unknown strategy kind");
}

}  // namespace detail

inline PromptText render_prompt(Strategy strategy, const SentencePair& pair) {
  if (pair.source.empty() || pair.target.empty()) throw PromptError("pair '" + pair.id + "' has an empty side");
  if (pair.src_lang.code.empty() || pair.tgt_lang.code.empty())
    throw PromptError("pair '" + pair.id + "' has no language names");
  return {detail::fill_template(strategy, pair.source, pair.target, pair.src_lang.code, pair.tgt_lang.code), strategy,
          pair.id};
}

/// The template with its placeholders left in, for auditing.
inline std::string template_text(Strategy strategy) {
  return detail::fill_template(strategy, "[original SRC sentence]", "[original TGT sentence]", "[SRC language]",
                               "[TGT language]");
}

}  // namespace parasynth
