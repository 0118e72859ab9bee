#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "parasynth/errors.hpp"
#include "parasynth/text.hpp"

namespace parasynth {

using ordered_json = nlohmann::ordered_json;

/// A language as it appears in prompts ("Korean") plus its short code ("ko").
struct LanguageTag {
  std::string code;
  std::string iso;

  bool operator==(const LanguageTag&) const = default;
  bool empty() const { return code.empty() && iso.empty(); }
};

inline void validate_language(const LanguageTag& tag) {
  if (tag.code.empty()) throw CorpusError("language name is empty");
  if (tag.code.find_first_of("\r\n") != std::string::npos)
    throw CorpusError("language name contains a line break: " + tag.code);
  const bool iso_ok = tag.iso.size() >= 2 && tag.iso.size() <= 3 &&
                      tag.iso.find_first_not_of("abcdefghijklmnopqrstuvwxyz") == std::string::npos;
  if (!iso_ok) throw CorpusError("language code must match [a-z]{2,3}: '" + tag.iso + "'");
}

/// Parses "Korean:ko".
inline LanguageTag parse_language(std::string_view value) {
  const auto colon = value.rfind(':');
  if (colon == std::string_view::npos)
    throw CorpusError("language must be given as Name:code, got '" + std::string(value) + "'");
  LanguageTag tag{std::string(value.substr(0, colon)), std::string(value.substr(colon + 1))};
  validate_language(tag);
  return tag;
}

enum class Origin { original, paraphrase, multi_target, storytelling };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::original: return "original";
    case Origin::paraphrase: return "paraphrase";
    case Origin::multi_target: return "multi_target";
    case Origin::storytelling: return "storytelling";
  }
  throw CorpusError("invalid origin value");
}

inline Origin origin_from_string(std::string_view s) {
  for (Origin o : {Origin::original, Origin::paraphrase, Origin::multi_target, Origin::storytelling})
    if (to_string(o) == s) return o;
  throw CorpusError("unknown origin '" + std::string(s) + "'");
}

// Strategy-specific indices of a synthetic pair. Paraphrase cells use
// (src_index, tgt_index) with 0 meaning the original side was kept;
// multi-target and storytelling use index.
struct Derivation {
  std::optional<int> src_index;
  std::optional<int> tgt_index;
  std::optional<int> index;
  bool duplicate_of_original = false;

  bool empty() const { return !src_index && !tgt_index && !index && !duplicate_of_original; }
  bool operator==(const Derivation&) const = default;
  auto operator<=>(const Derivation&) const = default;
};

struct SentencePair {
  std::string id;
  std::string source;
  std::string target;
  LanguageTag src_lang;
  LanguageTag tgt_lang;
  Origin origin = Origin::original;
  std::string parent_id;
  Derivation derivation;

  bool operator==(const SentencePair&) const = default;
};

/// Builds an original pair; text is normalized and parent_id is set to id.
inline SentencePair make_original(std::string id, std::string_view source, std::string_view target,
                                  LanguageTag src_lang, LanguageTag tgt_lang) {
  SentencePair p;
  p.parent_id = id;
  p.id = std::move(id);
  p.source = text::normalize_sentence(source);
  p.target = text::normalize_sentence(target);
  p.src_lang = std::move(src_lang);
  p.tgt_lang = std::move(tgt_lang);
  return p;
}

inline void validate_pair(const SentencePair& p, std::size_t line = 0) {
  if (p.id.empty()) throw CorpusError("empty id", line);
  if (text::trim_view(p.source).empty()) throw CorpusError("empty source sentence in '" + p.id + "'", line);
  if (text::trim_view(p.target).empty()) throw CorpusError("empty target sentence in '" + p.id + "'", line);
  if (p.origin == Origin::original) {
    if (p.parent_id != p.id) throw CorpusError("original pair '" + p.id + "' must be its own parent", line);
    if (!p.derivation.empty()) throw CorpusError("original pair '" + p.id + "' carries a derivation", line);
  } else if (p.parent_id.empty() || p.parent_id == p.id) {
    throw CorpusError("synthetic pair '" + p.id + "' has no parent", line);
  }
}

struct Corpus {
  LanguageTag src_lang;
  LanguageTag tgt_lang;
  std::vector<SentencePair> pairs;

  bool operator==(const Corpus&) const = default;

  const SentencePair* find(std::string_view id) const {
    for (const auto& p : pairs)
      if (p.id == id) return &p;
    return nullptr;
  }
};

enum class Format { tsv, jsonl };

inline Format parse_format(std::string_view s) {
  if (s == "tsv") return Format::tsv;
  if (s == "jsonl") return Format::jsonl;
  throw UsageError("unknown corpus format '" + std::string(s) + "' (expected tsv or jsonl)");
}

struct LoadOptions {
  // Required for TSV input, fallback for an empty JSONL file.
  LanguageTag src_lang;
  LanguageTag tgt_lang;
  // Require every synthetic record's parent to be an original record of the same file.
  bool check_parents = true;
};

namespace detail {

inline ordered_json language_to_json(const LanguageTag& t) { return {{"code", t.code}, {"iso", t.iso}}; }

inline LanguageTag language_from_json(const ordered_json& j) {
  if (!j.is_object() || !j.contains("code") || !j.contains("iso"))
    throw CorpusError("language must be an object with code and iso");
  LanguageTag tag{j.at("code").get<std::string>(), j.at("iso").get<std::string>()};
  validate_language(tag);
  return tag;
}

inline ordered_json derivation_to_json(const Derivation& d) {
  ordered_json j = ordered_json::object();
  if (d.src_index) j["src_index"] = *d.src_index;
  if (d.tgt_index) j["tgt_index"] = *d.tgt_index;
  if (d.index) j["index"] = *d.index;
  if (d.duplicate_of_original) j["duplicate_of_original"] = true;
  return j;
}

inline Derivation derivation_from_json(const ordered_json& j) {
  if (!j.is_object()) throw CorpusError("derivation must be an object");
  Derivation d;
  for (const auto& [key, value] : j.items()) {
    if (key == "src_index") d.src_index = value.get<int>();
    else if (key == "tgt_index") d.tgt_index = value.get<int>();
    else if (key == "index") d.index = value.get<int>();
    else if (key == "duplicate_of_original") d.duplicate_of_original = value.get<bool>();
    else throw CorpusError("unknown derivation key '" + key + "'");
  }
  return d;
}

inline std::string synthesized_id(std::size_t line) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "L%07zu", line);
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline ordered_json pair_to_json(const SentencePair& p) {
  ordered_json j;
  j["id"] = p.id;
  j["source"] = p.source;
  j["target"] = p.target;
  j["src_lang"] = detail::language_to_json(p.src_lang);
  j["tgt_lang"] = detail::language_to_json(p.tgt_lang);
  j["origin"] = to_string(p.origin);
  j["parent_id"] = p.parent_id;
  j["derivation"] = detail::derivation_to_json(p.derivation);
  return j;
}

/// Checks corpus-level invariants: unique ids, shared languages and, when
/// asked, that every synthetic pair points at an original in the corpus.
inline void validate_corpus(const Corpus& corpus, bool check_parents) {
  std::unordered_set<std::string_view> ids;
  std::unordered_set<std::string_view> originals;
  for (const auto& p : corpus.pairs) {
    validate_pair(p);
    if (!ids.insert(p.id).second) throw CorpusError("duplicate id '" + p.id + "'");
    if (p.src_lang != corpus.src_lang || p.tgt_lang != corpus.tgt_lang)
      throw CorpusError("pair '" + p.id + "' does not share the corpus languages");
    if (p.origin == Origin::original) originals.insert(p.id);
  }
  if (!check_parents) return;
  for (const auto& p : corpus.pairs)
    if (p.origin != Origin::original && !originals.contains(p.parent_id))
      throw CorpusError("pair '" + p.id + "' refers to unknown parent '" + p.parent_id + "'");
}

inline Corpus parse_corpus(std::string_view content, Format format, const LoadOptions& options = {}) {
  Corpus corpus;
  corpus.src_lang = options.src_lang;
  corpus.tgt_lang = options.tgt_lang;
  if (format == Format::tsv) {
    validate_language(options.src_lang);
    validate_language(options.tgt_lang);
  }

  std::unordered_map<std::string, std::size_t> seen;  // id -> line
  std::vector<std::size_t> lines_of;
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(content)) {
    ++line_no;
    if (line.empty()) continue;
    if (!text::is_valid_utf8(line)) throw CorpusError("invalid UTF-8", line_no);

    SentencePair p;
    if (format == Format::tsv) {
      std::vector<std::string_view> cols;
      std::size_t start = 0;
      for (;;) {
        const auto tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
      }
      if (cols.size() == 3) p.id = std::string(text::trim_view(cols[0]));
      else if (cols.size() == 2) p.id = detail::synthesized_id(line_no);
      else
        throw CorpusError("expected 3 tab-separated columns (id, source, target), found " +
                              std::to_string(cols.size()),
                          line_no);
      p.source = text::normalize_sentence(cols[cols.size() - 2]);
      p.target = text::normalize_sentence(cols[cols.size() - 1]);
      p.src_lang = options.src_lang;
      p.tgt_lang = options.tgt_lang;
      p.parent_id = p.id;
    } else {
      ordered_json j;
      try {
        j = ordered_json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw CorpusError(std::string("malformed JSON record: ") + e.what(), line_no);
      }
      if (!j.is_object()) throw CorpusError("record is not a JSON object", line_no);
      try {
        for (const char* required : {"source", "target"})
          if (!j.contains(required) || !j.at(required).is_string())
            throw CorpusError(std::string("missing field '") + required + "'", line_no);
        p.id = j.contains("id") ? j.at("id").get<std::string>() : detail::synthesized_id(line_no);
        p.source = text::normalize_sentence(j.at("source").get<std::string>());
        p.target = text::normalize_sentence(j.at("target").get<std::string>());
        p.src_lang = j.contains("src_lang") ? detail::language_from_json(j.at("src_lang")) : options.src_lang;
        p.tgt_lang = j.contains("tgt_lang") ? detail::language_from_json(j.at("tgt_lang")) : options.tgt_lang;
        p.origin = j.contains("origin") ? origin_from_string(j.at("origin").get<std::string>()) : Origin::original;
        p.parent_id = j.contains("parent_id") ? j.at("parent_id").get<std::string>() : p.id;
        if (j.contains("derivation")) p.derivation = detail::derivation_from_json(j.at("derivation"));
      } catch (const CorpusError& e) {
        if (e.line) throw;
        throw CorpusError(e.what(), line_no);
      } catch (const nlohmann::json::exception& e) {
        throw CorpusError(std::string("bad field type: ") + e.what(), line_no);
      }
      if (corpus.pairs.empty()) {
        corpus.src_lang = p.src_lang;
        corpus.tgt_lang = p.tgt_lang;
      }
    }

    validate_pair(p, line_no);
    if (auto [it, inserted] = seen.emplace(p.id, line_no); !inserted)
      throw CorpusError("duplicate id '" + p.id + "' (first seen on line " + std::to_string(it->second) + ")",
                        line_no);
    try {
      validate_language(p.src_lang);
      validate_language(p.tgt_lang);
    } catch (const CorpusError& e) {
      throw CorpusError(e.what(), line_no);
    }
    if (p.src_lang != corpus.src_lang || p.tgt_lang != corpus.tgt_lang)
      throw CorpusError("languages differ from the rest of the corpus", line_no);
    corpus.pairs.push_back(std::move(p));
    lines_of.push_back(line_no);
  }

  if (options.check_parents) {
    std::unordered_set<std::string_view> originals;
    for (const auto& p : corpus.pairs)
      if (p.origin == Origin::original) originals.insert(p.id);
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
      const auto& p = corpus.pairs[i];
      if (p.origin != Origin::original && !originals.contains(p.parent_id))
        throw CorpusError("parent '" + p.parent_id + "' is not an original pair of this file", lines_of[i]);
    }
  }
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path, Format format, const LoadOptions& options = {}) {
  return parse_corpus(detail::read_file(path), format, options);
}

inline std::string serialize_corpus(const Corpus& corpus, Format format) {
  std::string out;
  for (const auto& p : corpus.pairs) {
    if (format == Format::jsonl) {
      out += pair_to_json(p).dump();
    } else {
      for (const std::string* field : {&p.id, &p.source, &p.target})
        if (field->find_first_of("\t\r\n") != std::string::npos)
          throw CorpusError("pair '" + p.id + "' cannot be written as TSV: field contains a tab or line break");
      out += p.id;
      out += '\t';
      out += p.source;
      out += '\t';
      out += p.target;
    }
    out += '\n';
  }
  return out;
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path, Format format) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent))
    throw IoError("parent directory does not exist: " + parent.string());
  detail::write_file(path, serialize_corpus(corpus, format));
}

}  // namespace parasynth
