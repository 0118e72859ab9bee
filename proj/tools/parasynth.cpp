// parasynth: grow a parallel corpus with LLM-generated pairs and measure how
// different the synthetic pairs are from their originals.
//
//   parasynth augment --input corpus.tsv --out run/ --strategy storytelling --ratio 2 --mock
//   parasynth analyze --input corpus.tsv --out run/
//   parasynth export  --out run/ --split synthetics-only --format tsv
//   parasynth dump-prompts
//
// Flags may also come from a flat `key = value` file given with --config;
// command-line flags win over the file.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "parasynth/http_transport.hpp"
#include "parasynth/parasynth.hpp"

namespace {

constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace parasynth;

  CLI::App app{"Synthetic parallel corpus augmentation and diversity analysis"};
  app.set_config("--config", "", "Flat key = value file mirroring the long flags");
  app.fallthrough();
  app.require_subcommand(1);

  RunConfig config;
  std::string format = "tsv", strategy = "storytelling", src_lang = "Korean:ko", tgt_lang = "German:de";
  std::string split = "all";
  std::string augmented, output;
  double timeout_s = 60.0;
  int n = 0, rpm = 0;

  app.add_option("--input", config.input, "Original corpus (augment, analyze)");
  app.add_option("--out", config.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", format, "Corpus format: input for augment/analyze, output for export")
      ->check(CLI::IsMember({"tsv", "jsonl"}))
      ->capture_default_str();
  app.add_option("--src-lang", src_lang, "Source language as Name:code")->capture_default_str();
  app.add_option("--tgt-lang", tgt_lang, "Target language as Name:code")->capture_default_str();
  app.add_option("--strategy", strategy, "paraphrase | multi-target | storytelling")
      ->check(CLI::IsMember({"paraphrase", "multi-target", "storytelling"}))
      ->capture_default_str();
  app.add_option("--n", n, "Variants per side / translations / story sentences (default 1 / 3 / 3)");
  app.add_option("--ratio", config.ratio, "Synthetic pairs as a multiple of the original count (0.5 .. 3.0)")
      ->capture_default_str();
  app.add_option("--seed", config.seed, "Sampling seed")->capture_default_str();
  app.add_option("--model", config.provider.model, "Model identifier")->capture_default_str();
  app.add_option("--temperature", config.provider.temperature, "Sampling temperature")
      ->check(CLI::Range(0.0, 2.0))
      ->capture_default_str();
  app.add_option("--max-tokens", config.provider.max_output_tokens, "Max output tokens per completion")
      ->capture_default_str();
  app.add_option("--base-url", config.provider.base_url, "Chat-completions endpoint base URL")->capture_default_str();
  app.add_option("--max-retries", config.provider.max_retries, "Retries on 429/5xx/timeouts")->capture_default_str();
  app.add_option("--concurrency", config.provider.max_concurrency, "Max requests in flight")->capture_default_str();
  app.add_option("--rpm", rpm, "Requests per minute (0 = unlimited)");
  app.add_option("--timeout", timeout_s, "Request timeout in seconds")->capture_default_str();
  app.add_option("--max-failure-rate", config.max_failure_rate, "Abort when more requests than this fail")
      ->capture_default_str();
  app.add_flag("--mock", config.mock, "Use the deterministic offline mock model");
  app.add_option("--cache-dir", config.cache_dir, "Completion cache directory")->capture_default_str();
  app.add_option("--embeddings", config.embeddings, "mock | file:PATH")->capture_default_str();
  app.add_option("--augmented", augmented, "Augmented corpus (default <out>/augmented.jsonl)");
  app.add_option("--split", split, "Export filter: all | originals-only | synthetics-only")->capture_default_str();
  app.add_option("--output", output, "Export file (default <out>/export-<split>.<format>)");

  auto* augment = app.add_subcommand("augment", "Generate, parse, combine and sample synthetic pairs");
  auto* analyze = app.add_subcommand("analyze", "Cosine/BLEU diversity of synthetic pairs against originals");
  auto* exporter = app.add_subcommand("export", "Export an augmented corpus, optionally filtered");
  auto* dump = app.add_subcommand("dump-prompts", "Print the prompt templates");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dump) {
      std::cout << dump_prompts(n > 0 ? std::optional<int>(n) : std::nullopt);
      return EXIT_SUCCESS;
    }

    config.format = parse_format(format);
    config.method = method_from_string(strategy);
    if (n != 0) config.n = n;
    config.src_lang = parse_language(src_lang);
    config.tgt_lang = parse_language(tgt_lang);
    config.provider.request_timeout = std::chrono::duration<double>(timeout_s);
    if (rpm > 0) config.provider.requests_per_minute = rpm;
    const std::filesystem::path augmented_path =
        augmented.empty() ? config.out_dir / kAugmentedFile : std::filesystem::path(augmented);

    if (*augment) {
      if (config.input.empty()) throw UsageError("--input is required");
      std::shared_ptr<Transport> transport;
      if (!config.mock) transport = std::make_shared<HttpLibTransport>(config.provider.base_url);
      run_augment(config, std::cout, transport);
    } else if (*analyze) {
      if (config.input.empty()) throw UsageError("--input is required");
      run_analyze(config, augmented_path, std::cout);
    } else if (*exporter) {
      const Split s = parse_split(split);
      const std::filesystem::path out =
          output.empty() ? config.out_dir / ("export-" + split + "." + format) : std::filesystem::path(output);
      const auto written = run_export(augmented_path, out, config.format, s);
      std::cout << "exported " << written << " records to " << out.string() << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
