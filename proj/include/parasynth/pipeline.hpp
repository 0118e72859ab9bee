#pragma once

// End-to-end stages behind the CLI verbs: augment, analyze, export and
// dump-prompts. Generation fans out over the provider; everything after it
// runs single-threaded in corpus order.

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "parasynth/augmentation.hpp"
#include "parasynth/corpus_io.hpp"
#include "parasynth/diversity_metrics.hpp"
#include "parasynth/errors.hpp"
#include "parasynth/llm_provider.hpp"
#include "parasynth/prompt_engine.hpp"
#include "parasynth/response_parser.hpp"

namespace parasynth {

inline constexpr const char* kAugmentedFile = "augmented.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kRejectsFile = "rejects.jsonl";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportTableFile = "report.txt";

/// Per-method count default, as in the reference prompts.
inline int default_count(Method m) {
  switch (m) {
    case Method::paraphrase: return 1;
    case Method::multi_target: return 3;
    case Method::storytelling: return kDefaultStorySentences;
  }
  return 1;
}

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out_dir = ".";
  Format format = Format::tsv;
  LanguageTag src_lang{"Korean", "ko"};
  LanguageTag tgt_lang{"German", "de"};
  Method method = Method::storytelling;
  std::optional<int> n;
  double ratio = 1.0;
  std::uint64_t seed = 0;
  ProviderConfig provider;
  bool mock = false;
  std::filesystem::path cache_dir = kDefaultCacheDir;
  std::string embeddings = "mock";  // "mock" or "file:PATH"
  // Abort when more than this fraction of requests fail at the provider.
  double max_failure_rate = 0.1;

  int count() const { return n.value_or(default_count(method)); }
};

struct AugmentSummary {
  std::size_t originals = 0;
  std::size_t pool_size = 0;
  std::size_t target = 0;
  std::size_t selected = 0;
  std::size_t requests = 0;
  std::size_t cache_hits = 0;
  std::size_t provider_failures = 0;
  std::vector<std::string> warnings;
  std::vector<Reject> rejects;
};

namespace detail {

inline LoadOptions load_options(const RunConfig& c, bool check_parents = true) {
  LoadOptions o;
  o.src_lang = c.src_lang;
  o.tgt_lang = c.tgt_lang;
  o.check_parents = check_parents;
  return o;
}

inline EmbeddingProvider embedding_provider(const std::string& choice) {
  if (choice == "mock") return EmbeddingProvider::mock();
  if (choice.starts_with("file:")) return EmbeddingProvider::from_file(choice.substr(5));
  throw UsageError("--embeddings must be 'mock' or 'file:PATH', got '" + choice + "'");
}

struct Job {
  std::size_t pair_index;
  PromptText prompt;
};

struct JobOutcome {
  std::optional<CompletionResult> result;
  std::string error;
};

inline std::vector<JobOutcome> run_jobs(Provider& provider, const std::vector<Job>& jobs) {
  std::vector<JobOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      try {
        outcomes[i].result = provider.complete(jobs[i].prompt);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(provider.config().max_concurrency), jobs.size());
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  return outcomes;
}

}  // namespace detail

inline ordered_json make_manifest(const RunConfig& c, const AugmentSummary& s, const std::vector<SentencePair>& selected) {
  ordered_json m;
  m["strategy"] = to_string(c.method);
  m["n"] = c.count();
  m["ratio"] = c.ratio;
  m["seed"] = c.seed;
  m["model"] = c.provider.model;
  m["temperature"] = c.provider.temperature;
  m["max_output_tokens"] = c.provider.max_output_tokens;
  m["provider"] = c.mock ? "mock" : "http";
  if (!c.mock) m["base_url"] = c.provider.base_url;
  m["input"] = c.input.string();
  m["format"] = c.format == Format::tsv ? "tsv" : "jsonl";
  m["src_lang"] = {{"code", c.src_lang.code}, {"iso", c.src_lang.iso}};
  m["tgt_lang"] = {{"code", c.tgt_lang.code}, {"iso", c.tgt_lang.iso}};
  ordered_json counts;
  counts["original"] = s.originals;
  for (Origin o : {Origin::paraphrase, Origin::multi_target, Origin::storytelling}) {
    std::size_t k = 0;
    for (const auto& p : selected) k += p.origin == o;
    counts[std::string(to_string(o))] = k;
  }
  m["counts"] = counts;
  m["pool_size"] = s.pool_size;
  m["target"] = s.target;
  m["rejects"] = s.rejects.size();
  m["warnings"] = s.warnings;
  return m;
}

/// Generates, parses, combines and samples synthetic pairs, then writes
/// augmented.jsonl, manifest.json and rejects.jsonl into config.out_dir.
inline AugmentSummary run_augment(const RunConfig& config, std::ostream& log,
                                  std::shared_ptr<Transport> transport = nullptr) {
  const int n = config.count();
  if (n < 1) throw UsageError("--n must be at least 1");
  if (!(config.ratio > 0)) throw UsageError("--ratio must be positive");
  if (!config.mock && !transport) throw UsageError("no transport configured for a non-mock run");

  Corpus corpus = load_corpus(config.input, config.format, detail::load_options(config));
  std::vector<SentencePair> originals;
  for (auto& p : corpus.pairs)
    if (p.origin == Origin::original) originals.push_back(p);

  std::filesystem::create_directories(config.out_dir);
  Provider provider(config.provider, config.cache_dir, config.mock ? nullptr : std::move(transport));

  const auto strategies = prompt_strategies(config.method, n);
  std::vector<detail::Job> jobs;
  for (std::size_t i = 0; i < originals.size(); ++i)
    for (const auto& s : strategies) jobs.push_back({i, render_prompt(s, originals[i])});
  const auto outcomes = detail::run_jobs(provider, jobs);

  AugmentSummary summary;
  summary.originals = originals.size();
  summary.requests = jobs.size();
  summary.cache_hits = provider.cache_hits();

  SyntheticPool pool;
  pool.method = config.method;
  pool.n = n;
  pool.seed = config.seed;

  std::size_t job = 0;
  for (const auto& original : originals) {
    pool.add_parent(original.id);
    std::vector<ParsedReply> replies;
    std::vector<bool> ok;
    for (const auto& strategy : strategies) {
      const auto& outcome = outcomes[job++];
      const std::string kind(to_string(strategy.kind));
      auto note = [&](const std::string& w) { summary.warnings.push_back(original.id + " " + kind + ": " + w); };
      if (!outcome.result) {
        ++summary.provider_failures;
        summary.rejects.push_back({original.id, kind, "", "provider: " + outcome.error});
        replies.emplace_back();
        ok.push_back(false);
        continue;
      }
      try {
        auto reply = strategy.kind == StrategyKind::storytelling ? parse_story(outcome.result->raw_text, n)
                                                                 : parse_variants(outcome.result->raw_text, n);
        for (const auto& w : reply.warnings) note(w);
        replies.push_back(std::move(reply));
        ok.push_back(true);
      } catch (const ParseError& e) {
        summary.rejects.push_back({original.id, kind, e.raw, e.what()});
        replies.emplace_back();
        ok.push_back(false);
      }
    }

    std::vector<std::string> warnings;
    std::vector<SentencePair> made;
    switch (config.method) {
      case Method::paraphrase: {
        const auto src = drop_verbatim_copies(replies[0].items, original.source, &warnings, "source paraphrase");
        const auto tgt = drop_verbatim_copies(replies[1].items, original.target, &warnings, "target paraphrase");
        made = combine_paraphrase(original, src, tgt);
        break;
      }
      case Method::multi_target:
        if (ok[0]) made = combine_multi_target(original, replies[0].items);
        break;
      case Method::storytelling:
        if (ok[0]) made = combine_storytelling(original, replies[0].story_pairs, &warnings);
        break;
    }
    for (const auto& w : warnings) summary.warnings.push_back(original.id + ": " + w);
    pool.add(std::move(made));
  }

  write_rejects(summary.rejects, config.out_dir / kRejectsFile);
  if (!jobs.empty() &&
      static_cast<double>(summary.provider_failures) > config.max_failure_rate * static_cast<double>(jobs.size()))
    throw Error("aborting: " + std::to_string(summary.provider_failures) + " of " + std::to_string(jobs.size()) +
                " requests failed at the provider (threshold " + std::to_string(config.max_failure_rate) +
                "); see " + (config.out_dir / kRejectsFile).string());

  summary.pool_size = pool.size();
  summary.target = ratio_target(originals.size(), config.ratio);
  const auto selected = sample_to_ratio(pool, originals.size(), config.ratio, config.seed);
  summary.selected = selected.size();

  Corpus augmented;
  augmented.src_lang = corpus.src_lang;
  augmented.tgt_lang = corpus.tgt_lang;
  augmented.pairs = originals;
  augmented.pairs.insert(augmented.pairs.end(), selected.begin(), selected.end());
  validate_corpus(augmented, true);
  write_corpus(augmented, config.out_dir / kAugmentedFile, Format::jsonl);
  detail::write_file(config.out_dir / kManifestFile, make_manifest(config, summary, selected).dump(2) + "\n");

  log << "originals: " << summary.originals << "\n"
      << "requests: " << summary.requests << " (cache hits " << summary.cache_hits << ")\n"
      << "pool: " << summary.pool_size << ", selected: " << summary.selected << " (target " << summary.target
      << ")\n"
      << to_string(origin_of(config.method)) << ": " << summary.selected << "\n"
      << "warnings: " << summary.warnings.size() << ", rejects: " << summary.rejects.size() << "\n";
  return summary;
}

/// Diversity of the synthetic pairs in an augmented file against the
/// original corpus. Writes report.json and report.txt into config.out_dir.
inline DiversityReport run_analyze(const RunConfig& config, const std::filesystem::path& augmented_path,
                                   std::ostream& log) {
  const Corpus originals = load_corpus(config.input, config.format, detail::load_options(config));
  const Corpus augmented = load_corpus(augmented_path, Format::jsonl, detail::load_options(config, false));
  std::vector<SentencePair> synthetics;
  for (const auto& p : augmented.pairs)
    if (p.origin != Origin::original) synthetics.push_back(p);

  ConfigEcho echo{std::string(to_string(config.method)), config.count(), config.provider.model,
                  config.provider.temperature, config.provider.max_output_tokens, config.seed, config.ratio,
                  config.mock ? "mock" : "http", config.embeddings};
  const auto manifest_path = augmented_path.parent_path() / kManifestFile;
  if (std::filesystem::is_regular_file(manifest_path)) {
    const auto m = nlohmann::json::parse(detail::read_file(manifest_path));
    echo.strategy = m.value("strategy", echo.strategy);
    echo.n = m.value("n", echo.n);
    echo.model = m.value("model", echo.model);
    echo.temperature = m.value("temperature", echo.temperature);
    echo.max_output_tokens = m.value("max_output_tokens", echo.max_output_tokens);
    echo.seed = m.value("seed", echo.seed);
    echo.ratio = m.value("ratio", echo.ratio);
    echo.provider = m.value("provider", echo.provider);
  }

  const auto embeddings = detail::embedding_provider(config.embeddings);
  auto report = diversity_report(originals, synthetics, embeddings, echo);
  std::filesystem::create_directories(config.out_dir);
  detail::write_file(config.out_dir / kReportJsonFile, report_to_json(report).dump(2) + "\n");
  const auto table = report_to_table(report);
  detail::write_file(config.out_dir / kReportTableFile, table);
  log << table.substr(0, table.find("synthetic_id\t"));
  return report;
}

enum class Split { all, originals, synthetics };

inline Split parse_split(std::string_view s) {
  if (s == "all") return Split::all;
  if (s == "originals" || s == "originals-only") return Split::originals;
  if (s == "synthetics" || s == "synthetics-only") return Split::synthetics;
  throw UsageError("unknown split '" + std::string(s) + "' (expected all, originals-only or synthetics-only)");
}

/// Writes the selected records of an augmented file; returns how many.
inline std::size_t run_export(const std::filesystem::path& augmented_path, const std::filesystem::path& out_path,
                              Format format, Split split) {
  LoadOptions options;
  options.check_parents = false;
  Corpus corpus = load_corpus(augmented_path, Format::jsonl, options);
  std::erase_if(corpus.pairs, [&](const SentencePair& p) {
    const bool original = p.origin == Origin::original;
    return (split == Split::originals && !original) || (split == Split::synthetics && original);
  });
  write_corpus(corpus, out_path, format);
  return corpus.pairs.size();
}

/// All four templates with placeholders, for auditing.
inline std::string dump_prompts(std::optional<int> n = std::nullopt) {
  std::string out;
  for (auto kind : {StrategyKind::paraphrase_src, StrategyKind::paraphrase_tgt, StrategyKind::multi_target,
                    StrategyKind::storytelling}) {
    const int count = n.value_or(kind == StrategyKind::paraphrase_src || kind == StrategyKind::paraphrase_tgt ? 1 : 3);
    out += "== " + std::string(to_string(kind)) + " (n=" + std::to_string(count) + ")\n";
    out += template_text({kind, count});
    out += "\n\n";
  }
  return out;
}

}  // namespace parasynth
