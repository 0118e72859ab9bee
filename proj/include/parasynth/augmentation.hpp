#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "parasynth/corpus_io.hpp"
#include "parasynth/errors.hpp"
#include "parasynth/prompt_engine.hpp"
#include "parasynth/response_parser.hpp"

namespace parasynth {

enum class Method { paraphrase, multi_target, storytelling };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::paraphrase: return "paraphrase";
    case Method::multi_target: return "multi-target";
    case Method::storytelling: return "storytelling";
  }
  throw UsageError("invalid method");
}

inline Method method_from_string(std::string_view s) {
  if (s == "paraphrase") return Method::paraphrase;
  if (s == "multi-target" || s == "multi_target") return Method::multi_target;
  if (s == "storytelling") return Method::storytelling;
  throw UsageError("unknown strategy '" + std::string(s) + "' (expected paraphrase, multi-target or storytelling)");
}

inline Origin origin_of(Method m) {
  switch (m) {
    case Method::paraphrase: return Origin::paraphrase;
    case Method::multi_target: return Origin::multi_target;
    case Method::storytelling: return Origin::storytelling;
  }
  throw UsageError("invalid method");
}

/// Prompts issued per original pair. Paraphrase asks for both sides.
inline std::vector<Strategy> prompt_strategies(Method m, int n) {
  switch (m) {
    case Method::paraphrase: return {{StrategyKind::paraphrase_src, n}, {StrategyKind::paraphrase_tgt, n}};
    case Method::multi_target: return {{StrategyKind::multi_target, n}};
    case Method::storytelling: return {{StrategyKind::storytelling, n}};
  }
  throw UsageError("invalid method");
}

namespace detail {

inline SentencePair derived_pair(const SentencePair& parent, Origin origin, std::string id_suffix, std::string source,
                                 std::string target, Derivation d) {
  SentencePair p;
  p.id = parent.id + "/" + id_suffix;
  p.source = text::normalize_sentence(source);
  p.target = text::normalize_sentence(target);
  p.src_lang = parent.src_lang;
  p.tgt_lang = parent.tgt_lang;
  p.origin = origin;
  p.parent_id = parent.id;
  p.derivation = d;
  return p;
}

}  // namespace detail

/// Removes variants that repeat the original sentence verbatim (after
/// normalization), recording one warning per removal.
inline std::vector<std::string> drop_verbatim_copies(const std::vector<std::string>& variants,
                                                     std::string_view original, std::vector<std::string>* warnings,
                                                     std::string_view label = "variant") {
  std::vector<std::string> kept;
  for (const auto& v : variants) {
    if (text::normalize_sentence(v) == original) {
      if (warnings) warnings->push_back(std::string(label) + " repeats the original sentence; dropped");
      continue;
    }
    kept.push_back(v);
  }
  return kept;
}

/// Every cell of ({source} + src_variants) x ({target} + tgt_variants) except
/// the original pair itself: (|src|+1)(|tgt|+1) - 1 pairs. Index 0 on either
/// side means the original sentence was kept.
inline std::vector<SentencePair> combine_paraphrase(const SentencePair& original,
                                                    const std::vector<std::string>& src_variants,
                                                    const std::vector<std::string>& tgt_variants) {
  std::vector<SentencePair> out;
  out.reserve((src_variants.size() + 1) * (tgt_variants.size() + 1) - 1);
  for (std::size_t j = 0; j <= tgt_variants.size(); ++j) {
    for (std::size_t i = 0; i <= src_variants.size(); ++i) {
      if (i == 0 && j == 0) continue;
      Derivation d;
      d.src_index = static_cast<int>(i);
      d.tgt_index = static_cast<int>(j);
      out.push_back(detail::derived_pair(original, Origin::paraphrase,
                                         "para-" + std::to_string(i) + "-" + std::to_string(j),
                                         i == 0 ? original.source : src_variants[i - 1],
                                         j == 0 ? original.target : tgt_variants[j - 1], d));
    }
  }
  return out;
}

/// One pair per translation of the original source. Translations equal to
/// the original target are kept and flagged duplicate_of_original.
inline std::vector<SentencePair> combine_multi_target(const SentencePair& original,
                                                      const std::vector<std::string>& translations) {
  std::vector<SentencePair> out;
  out.reserve(translations.size());
  for (std::size_t k = 0; k < translations.size(); ++k) {
    Derivation d;
    d.index = static_cast<int>(k);
    auto p = detail::derived_pair(original, Origin::multi_target, "mt-" + std::to_string(k), original.source,
                                  translations[k], d);
    p.derivation.duplicate_of_original = p.target == original.target;
    out.push_back(std::move(p));
  }
  return out;
}

/// Story sentence k paired with its translation. Entries with an empty side
/// are dropped (with a warning) and keep their index gap.
inline std::vector<SentencePair> combine_storytelling(const SentencePair& original,
                                                      const std::vector<StoryPair>& story_pairs,
                                                      std::vector<std::string>* warnings = nullptr) {
  std::vector<SentencePair> out;
  for (std::size_t k = 0; k < story_pairs.size(); ++k) {
    const auto& sp = story_pairs[k];
    if (text::trim_view(sp.source).empty() || text::trim_view(sp.target).empty()) {
      if (warnings) warnings->push_back("story sentence " + std::to_string(k) + " has an empty side; dropped");
      continue;
    }
    Derivation d;
    d.index = static_cast<int>(k);
    out.push_back(detail::derived_pair(original, Origin::storytelling, "story-" + std::to_string(k), sp.source,
                                       sp.target, d));
  }
  return out;
}

/// All synthetic pairs generated for a corpus, keyed by original pair id.
/// Within a parent, pairs keep the order they were added in.
struct SyntheticPool {
  Method method = Method::storytelling;
  int n = kDefaultStorySentences;
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<SentencePair>> by_parent;

  void add_parent(const std::string& parent_id) { by_parent.try_emplace(parent_id); }

  void add(std::vector<SentencePair> pairs) {
    for (auto& p : pairs) {
      if (p.origin == Origin::original) throw CorpusError("pool members must be synthetic: '" + p.id + "'");
      auto& bucket = by_parent[p.parent_id];
      for (const auto& existing : bucket)
        if (existing.derivation == p.derivation)
          throw CorpusError("duplicate derivation under parent '" + p.parent_id + "'");
      bucket.push_back(std::move(p));
    }
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& [_, v] : by_parent) total += v.size();
    return total;
  }
};

/// round(ratio * original_count), halves rounded up.
inline std::size_t ratio_target(std::size_t original_count, double ratio) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(original_count) + 0.5));
}

/// Stratified round-robin: parents are visited in id order starting at
/// seed mod (number of non-empty parents); each visit takes that parent's
/// next unused pair, cycling until the target count is reached.
inline std::vector<SentencePair> sample_to_ratio(const SyntheticPool& pool, std::size_t original_count, double ratio,
                                                 std::uint64_t seed) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw UsageError("ratio must be a positive number");
  if (original_count == 0) throw UsageError("original corpus is empty");
  const std::size_t target = ratio_target(original_count, ratio);
  const std::size_t available = pool.size();
  if (available < target) throw InsufficientPoolError(available, target);

  std::vector<const std::vector<SentencePair>*> parents;
  for (const auto& [_, pairs] : pool.by_parent)
    if (!pairs.empty()) parents.push_back(&pairs);

  std::vector<SentencePair> out;
  out.reserve(target);
  if (target == 0) return out;
  const std::size_t start = static_cast<std::size_t>(seed % parents.size());
  for (std::size_t round = 0; out.size() < target; ++round) {
    for (std::size_t step = 0; step < parents.size() && out.size() < target; ++step) {
      const auto& pairs = *parents[(start + step) % parents.size()];
      if (round < pairs.size()) out.push_back(pairs[round]);
    }
  }
  return out;
}

}  // namespace parasynth
