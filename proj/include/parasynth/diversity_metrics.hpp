#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "parasynth/corpus_io.hpp"
#include "parasynth/errors.hpp"
#include "parasynth/text.hpp"

namespace parasynth {

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

/// Splits punctuation off into its own tokens, then splits on whitespace.
/// Case is preserved.
inline std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char32_t cp : text::code_points(sentence)) {
    if (text::is_space(cp)) {
      flush();
    } else if (text::is_punct(cp)) {
      flush();
      std::string p;
      text::append_utf8(p, cp);
      tokens.push_back(std::move(p));
    } else {
      text::append_utf8(current, cp);
    }
  }
  flush();
  return tokens;
}

inline constexpr int kBleuOrder = 4;

struct BleuStats {
  std::array<double, kBleuOrder> matched{};  // clipped n-gram matches
  std::array<double, kBleuOrder> total{};    // hypothesis n-grams
  double hypothesis_length = 0;
  double reference_length = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (int n = 0; n < kBleuOrder; ++n) {
      matched[n] += o.matched[n];
      total[n] += o.total[n];
    }
    hypothesis_length += o.hypothesis_length;
    reference_length += o.reference_length;
    return *this;
  }
};

namespace detail {

inline std::unordered_map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::unordered_map<std::string, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      key += tokens[i + k];
      key += '\x1f';
    }
    ++counts[key];
  }
  return counts;
}

inline double brevity_penalty(double c, double r) { return c > r ? 1.0 : std::exp(1.0 - r / c); }

}  // namespace detail

inline BleuStats bleu_stats(const std::vector<std::string>& hypothesis, const std::vector<std::string>& reference) {
  BleuStats s;
  s.hypothesis_length = static_cast<double>(hypothesis.size());
  s.reference_length = static_cast<double>(reference.size());
  for (int n = 1; n <= kBleuOrder; ++n) {
    const auto hyp = detail::ngram_counts(hypothesis, static_cast<std::size_t>(n));
    const auto ref = detail::ngram_counts(reference, static_cast<std::size_t>(n));
    int matched = 0, total = 0;
    for (const auto& [gram, count] : hyp) {
      total += count;
      if (auto it = ref.find(gram); it != ref.end()) matched += std::min(count, it->second);
    }
    s.matched[n - 1] = matched;
    s.total[n - 1] = total;
  }
  return s;
}

/// Smoothed sentence-level BLEU-4 in [0, 100]. A zero match count at orders
/// 2-4 becomes (0+1)/(total+1); no unigram match means 0.
inline double sentence_bleu(std::string_view hypothesis, std::string_view reference) {
  const auto s = bleu_stats(tokenize(hypothesis), tokenize(reference));
  if (s.hypothesis_length == 0 || s.reference_length == 0 || s.matched[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < kBleuOrder; ++n) {
    const double p = s.matched[n] > 0 ? s.matched[n] / s.total[n] : 1.0 / (s.total[n] + 1.0);
    log_sum += std::log(p);
  }
  return 100.0 * detail::brevity_penalty(s.hypothesis_length, s.reference_length) * std::exp(log_sum / kBleuOrder);
}

/// Corpus BLEU-4 over (hypothesis, reference) pairs: statistics are pooled
/// before the geometric mean. Unsmoothed.
inline double corpus_bleu(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw MetricError("corpus BLEU needs at least one pair");
  BleuStats pooled;
  for (const auto& [hyp, ref] : pairs) pooled += bleu_stats(tokenize(hyp), tokenize(ref));
  if (pooled.hypothesis_length == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < kBleuOrder; ++n) {
    if (pooled.matched[n] == 0) return 0.0;
    log_sum += std::log(pooled.matched[n] / pooled.total[n]);
  }
  return 100.0 * detail::brevity_penalty(pooled.hypothesis_length, pooled.reference_length) *
         std::exp(log_sum / kBleuOrder);
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

enum class EmbeddingSource { file_import, mock };

struct Embedding {
  std::vector<double> vector;
  EmbeddingSource source = EmbeddingSource::mock;

  std::size_t dim() const { return vector.size(); }
};

inline Embedding make_embedding(std::vector<double> v, EmbeddingSource source) {
  if (v.empty()) throw MetricError("embedding has no components");
  for (double x : v)
    if (!std::isfinite(x)) throw MetricError("embedding has a non-finite component");
  return {std::move(v), source};
}

inline double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    throw MetricError("embedding dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.vector[i] * b.vector[i];
    na += a.vector[i] * a.vector[i];
    nb += b.vector[i] * b.vector[i];
  }
  if (na == 0 || nb == 0) throw MetricError("cosine similarity of a zero vector is undefined");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline constexpr std::size_t kMockEmbeddingDim = 256;

/// Hash bucket of one character trigram (FNV-1a over code points).
inline std::size_t trigram_bucket(char32_t a, char32_t b, char32_t c) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char32_t cp : {a, b, c}) {
    h ^= static_cast<std::uint64_t>(cp);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h % kMockEmbeddingDim);
}

// The sentence is framed by U+0002 / U+0003 so that every non-empty string
// has at least one trigram.
inline std::vector<std::array<char32_t, 3>> char_trigrams(std::string_view sentence) {
  auto cps = text::code_points(sentence);
  std::vector<std::array<char32_t, 3>> out;
  if (cps.empty()) return out;
  cps.insert(cps.begin(), U'\x02');
  cps.push_back(U'\x03');
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) out.push_back({cps[i], cps[i + 1], cps[i + 2]});
  return out;
}

/// L2-normalized hashed trigram counts. Empty input gives the zero vector.
inline Embedding mock_embedding(std::string_view sentence) {
  std::vector<double> v(kMockEmbeddingDim, 0.0);
  for (const auto& t : char_trigrams(sentence)) v[trigram_bucket(t[0], t[1], t[2])] += 1.0;
  double norm = 0;
  for (double x : v) norm += x * x;
  if (norm > 0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return {std::move(v), EmbeddingSource::mock};
}

/// Either the mock encoder or a table of precomputed vectors read from a
/// `sentence<TAB>v1,v2,...` file.
class EmbeddingProvider {
 public:
  static EmbeddingProvider mock() { return EmbeddingProvider(); }

  static EmbeddingProvider from_string(std::string_view content) {
    EmbeddingProvider p;
    p.source_ = EmbeddingSource::file_import;
    std::size_t line_no = 0;
    for (std::string_view line : text::split_lines(content)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.rfind('\t');
      if (tab == std::string_view::npos) throw CorpusError("embedding record has no tab", line_no);
      std::vector<double> v;
      std::string_view rest = line.substr(tab + 1);
      while (true) {
        const auto comma = rest.find(',');
        std::string_view field = text::trim_view(rest.substr(0, comma));
        double x = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
        if (ec != std::errc() || ptr != field.data() + field.size())
          throw CorpusError("bad vector component '" + std::string(field) + "'", line_no);
        v.push_back(x);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
      if (p.dim_ == 0) p.dim_ = v.size();
      if (v.size() != p.dim_)
        throw CorpusError("expected " + std::to_string(p.dim_) + " components, found " + std::to_string(v.size()),
                          line_no);
      try {
        p.table_.insert_or_assign(std::string(line.substr(0, tab)), make_embedding(std::move(v), EmbeddingSource::file_import));
      } catch (const MetricError& e) {
        throw CorpusError(e.what(), line_no);
      }
    }
    return p;
  }

  static EmbeddingProvider from_file(const std::filesystem::path& path) {
    return from_string(detail::read_file(path));
  }

  EmbeddingSource source() const { return source_; }
  std::size_t dim() const { return source_ == EmbeddingSource::mock ? kMockEmbeddingDim : dim_; }
  std::string_view name() const { return source_ == EmbeddingSource::mock ? "mock" : "file_import"; }

  Embedding embed(std::string_view sentence) const {
    if (source_ == EmbeddingSource::mock) return mock_embedding(sentence);
    if (auto it = table_.find(std::string(sentence)); it != table_.end()) return it->second;
    throw MetricError("missing embedding for sentence: " + std::string(sentence));
  }

 private:
  EmbeddingProvider() = default;

  EmbeddingSource source_ = EmbeddingSource::mock;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Embedding> table_;
};

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct PairScore {
  std::string synthetic_id;
  double cosine = 0;
  double bleu = 0;
};

/// Generation settings echoed into every report.
struct ConfigEcho {
  std::string strategy;
  int n = 0;
  std::string model;
  double temperature = 0;
  int max_output_tokens = 0;
  std::uint64_t seed = 0;
  double ratio = 0;
  std::string provider;
  std::string embeddings;
};

struct DiversityReport {
  std::size_t pair_count = 0;
  double mean_cosine = 0;
  double mean_sentence_bleu = 0;
  double corpus_bleu = 0;
  std::vector<PairScore> per_pair;  // sorted by synthetic_id
  ConfigEcho config_echo;
};

/// Compares each synthetic pair's target sentence with its parent's target
/// sentence: embedding cosine and sentence BLEU (synthetic as hypothesis).
inline DiversityReport diversity_report(const Corpus& originals, const std::vector<SentencePair>& synthetics,
                                        const EmbeddingProvider& embeddings, ConfigEcho echo = {}) {
  if (synthetics.empty()) throw MetricError("diversity report needs at least one synthetic pair");
  std::unordered_map<std::string_view, const SentencePair*> parents;
  for (const auto& p : originals.pairs)
    if (p.origin == Origin::original) parents.emplace(p.id, &p);

  std::vector<const SentencePair*> order;
  order.reserve(synthetics.size());
  for (const auto& s : synthetics) {
    if (!parents.contains(s.parent_id))
      throw CorpusError("synthetic pair '" + s.id + "' has unresolvable parent '" + s.parent_id + "'");
    order.push_back(&s);
  }
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

  DiversityReport report;
  report.config_echo = std::move(echo);
  report.pair_count = order.size();
  std::vector<std::pair<std::string, std::string>> bleu_pairs;
  double cos_sum = 0, bleu_sum = 0;
  for (const auto* s : order) {
    const auto* parent = parents.at(s->parent_id);
    PairScore score{s->id, cosine(embeddings.embed(s->target), embeddings.embed(parent->target)),
                    sentence_bleu(s->target, parent->target)};
    cos_sum += score.cosine;
    bleu_sum += score.bleu;
    report.per_pair.push_back(std::move(score));
    bleu_pairs.emplace_back(s->target, parent->target);
  }
  report.mean_cosine = cos_sum / static_cast<double>(order.size());
  report.mean_sentence_bleu = bleu_sum / static_cast<double>(order.size());
  report.corpus_bleu = corpus_bleu(bleu_pairs);
  return report;
}

inline ordered_json report_to_json(const DiversityReport& r) {
  const auto& e = r.config_echo;
  ordered_json j;
  j["config_echo"] = {{"strategy", e.strategy},     {"n", e.n},
                      {"model", e.model},           {"temperature", e.temperature},
                      {"max_output_tokens", e.max_output_tokens}, {"seed", e.seed},
                      {"ratio", e.ratio},           {"provider", e.provider},
                      {"embeddings", e.embeddings}};
  j["pair_count"] = r.pair_count;
  j["mean_cosine"] = r.mean_cosine;
  j["mean_sentence_bleu"] = r.mean_sentence_bleu;
  j["corpus_bleu"] = r.corpus_bleu;
  ordered_json rows = ordered_json::array();
  for (const auto& p : r.per_pair) rows.push_back({{"synthetic_id", p.synthetic_id}, {"cosine", p.cosine}, {"bleu", p.bleu}});
  j["per_pair"] = std::move(rows);
  return j;
}

inline std::string report_to_table(const DiversityReport& r) {
  const auto& e = r.config_echo;
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "# strategy=%s n=%d model=%s temperature=%g max_output_tokens=%d seed=%llu ratio=%g provider=%s "
                "embeddings=%s\n",
                e.strategy.c_str(), e.n, e.model.c_str(), e.temperature, e.max_output_tokens,
                static_cast<unsigned long long>(e.seed), e.ratio, e.provider.c_str(), e.embeddings.c_str());
  out += buf;
  std::snprintf(buf, sizeof buf, "pairs               %zu\nmean cosine         %.6f\nmean sentence BLEU  %.3f\ncorpus BLEU         %.3f\n\n",
                r.pair_count, r.mean_cosine, r.mean_sentence_bleu, r.corpus_bleu);
  out += buf;
  out += "synthetic_id\tcosine\tbleu\n";
  for (const auto& p : r.per_pair) {
    std::snprintf(buf, sizeof buf, "\t%.6f\t%.3f\n", p.cosine, p.bleu);
    out += p.synthetic_id;
    out += buf;
  }
  return out;
}

}  // namespace parasynth
