#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "parasynth/corpus_io.hpp"
#include "parasynth/errors.hpp"
#include "parasynth/prompt_engine.hpp"
#include "parasynth/text.hpp"

namespace parasynth {

inline constexpr const char* kApiKeyEnv = "PARASYNTH_API_KEY";
inline constexpr const char* kDefaultCacheDir = ".parasynth-cache";

struct ProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  double temperature = 1.0;
  int max_output_tokens = 512;
  std::chrono::duration<double> request_timeout{60.0};
  int max_retries = 5;
  int max_concurrency = 4;
  std::optional<int> requests_per_minute;  // unset: unlimited
  // First backoff ceiling; each retry doubles it. Full jitter draws the actual
  // sleep uniformly from [0, ceiling].
  std::chrono::duration<double> backoff_base{1.0};

  void validate() const {
    if (model.empty()) throw UsageError("model must not be empty");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw UsageError("temperature must lie in [0, 2]");
    if (max_output_tokens < 1) throw UsageError("max_output_tokens must be positive");
    if (max_retries < 0) throw UsageError("max_retries must be non-negative");
    if (max_concurrency < 1) throw UsageError("max_concurrency must be at least 1");
    if (requests_per_minute && *requests_per_minute < 1) throw UsageError("requests_per_minute must be positive");
    if (request_timeout.count() <= 0) throw UsageError("request_timeout must be positive");
  }
};

struct CompletionResult {
  PromptText prompt;
  std::string raw_text;
  std::string model;
  bool cached = false;
  int attempts = 0;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

/// Digest over everything that changes the model's output distribution.
/// Endpoint, timeouts and retry settings are excluded.
inline std::string cache_key(const ProviderConfig& config, const PromptText& prompt) {
  const nlohmann::json material = {config.model, config.temperature, config.max_output_tokens, prompt.text};
  return sha256_hex(material.dump());
}

/// One file per key; values are the raw reply bytes.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<std::string> get(const std::string& key) const {
    const auto path = dir_ / key;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    return detail::read_file(path);
  }

  void put(const std::string& key, std::string_view value) const {
    static std::atomic<std::uint64_t> counter{0};
    const auto tmp = dir_ / (key + ".tmp." + std::to_string(counter.fetch_add(1)) + "." +
                             std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    detail::write_file(tmp, value);
    std::filesystem::rename(tmp, dir_ / key);
  }

 private:
  std::filesystem::path dir_;
};

/// Token bucket with a burst of one request: consecutive acquisitions are
/// spaced 60/rpm seconds apart.
class TokenBucket {
 public:
  using clock = std::chrono::steady_clock;

  explicit TokenBucket(std::optional<int> requests_per_minute) {
    if (requests_per_minute)
      interval_ = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(60.0 / *requests_per_minute));
  }

  void acquire() {
    if (interval_ == clock::duration::zero()) return;
    clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::mutex mutex_;
  clock::duration interval_ = clock::duration::zero();
  clock::time_point next_{};
};

/// Counting gate on requests in flight. Records the peak for diagnostics.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : limit_(std::max(1, limit)) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    cv_.notify_one();
  }

  int peak() const {
    std::lock_guard lock(mutex_);
    return peak_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int limit_;
  int in_flight_ = 0;
  int peak_ = 0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Network-level failure (refused connection, timeout, reset). Always transient.
struct TransportError : public Error {
  using Error::Error;
};

/// Sends one POST to the chat-completions endpoint.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post_chat_completion(const std::string& body, const std::string& bearer_token,
                                            std::chrono::duration<double> timeout) = 0;
};

inline std::string build_request_body(const ProviderConfig& config, const PromptText& prompt) {
  ordered_json j;
  j["model"] = config.model;
  j["temperature"] = config.temperature;
  j["max_tokens"] = config.max_output_tokens;
  j["messages"] = ordered_json::array({{{"role", "user"}, {"content", prompt.text}}});
  return j.dump();
}

struct ParsedCompletion {
  std::string text;
  std::string model;
};

inline ParsedCompletion parse_response_body(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    ParsedCompletion out;
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_null()) out.text = content.get<std::string>();
    if (j.contains("model") && j["model"].is_string()) out.model = j["model"].get<std::string>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(ProviderError::Kind::permanent, std::string("malformed completion response: ") + e.what(), 200,
                        body);
  }
}

namespace detail {

// splitmix64, used for the mock's choices so replies do not depend on the
// standard library's distribution implementations.
struct MockRng {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

inline const std::map<std::string, std::string, std::less<>>& mock_synonyms() {
  static const std::map<std::string, std::string, std::less<>> table = [] {
    const std::pair<const char*, const char*> pairs[] = {
        {"Kredit", "Darlehen"},   {"möchten", "wollen"},   {"haben", "bekommen"},  {"viel", "hoch"},
        {"Geld", "Kapital"},      {"gerne", "gern"},       {"etwa", "ungefähr"},   {"starten", "beginnen"},
        {"loan", "credit"},       {"want", "wish"},        {"money", "funds"},     {"much", "large"},
        {"대출을", "융자를"},     {"원하세요?", "바라세요?"}, {"얼마정도", "얼마나"}, {"받고", "얻고"},
    };
    std::map<std::string, std::string, std::less<>> t;
    for (auto [a, b] : pairs) {
      t.emplace(a, b);
      t.emplace(b, a);
    }
    return t;
  }();
  return table;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// Synonym substitution with probability 1/2 per known token, then a
// Fisher-Yates shuffle. Results equal to the sentence or to an earlier
// variant are rotated, and numbered as a last resort.
inline std::vector<std::string> mock_variants(const std::vector<std::string>& tokens, int count, MockRng& rng,
                                              std::vector<std::string> taken) {
  std::vector<std::string> out;
  for (int v = 0; v < count; ++v) {
    auto t = tokens;
    for (auto& tok : t)
      if (auto it = mock_synonyms().find(tok); it != mock_synonyms().end() && rng.below(2) == 0) tok = it->second;
    for (std::size_t i = t.size(); i > 1; --i) std::swap(t[i - 1], t[rng.below(i)]);
    std::string candidate = join(t);
    auto clash = [&](const std::string& c) { return std::find(taken.begin(), taken.end(), c) != taken.end(); };
    for (std::size_t r = 1; r < t.size() && clash(candidate); ++r) {
      std::rotate(t.begin(), t.begin() + 1, t.end());
      candidate = join(t);
    }
    if (clash(candidate)) candidate += " (" + std::to_string(v + 1) + ")";
    taken.push_back(candidate);
    out.push_back(std::move(candidate));
  }
  return out;
}

}  // namespace detail

/// Offline stand-in for a chat model. Replies are a pure function of the
/// prompt text: numbered variant lists for paraphrase and multi-target, and
/// for storytelling a block of story lines, a blank line, then the same
/// number of "translation" lines.
inline std::string mock_reply(const PromptText& prompt) {
  const std::string digest = sha256_hex(prompt.text);
  detail::MockRng rng{std::stoull(digest.substr(0, 16), nullptr, 16)};
  const auto newline = prompt.text.find('\n');
  const std::string sentence = prompt.text.substr(0, newline);
  auto tokens = text::split_whitespace(sentence);
  if (tokens.empty()) tokens.push_back("…");
  const int n = std::max(1, prompt.strategy.n);

  std::string reply;
  if (prompt.strategy.kind != StrategyKind::storytelling) {
    const auto variants = detail::mock_variants(tokens, n, rng, {sentence});
    for (int i = 0; i < n; ++i) {
      if (i) reply.push_back('\n');
      reply += std::to_string(i + 1) + ". " + variants[static_cast<std::size_t>(i)];
    }
    return reply;
  }

  const auto story = detail::mock_variants(tokens, n, rng, {});
  std::vector<std::string> translations;
  for (std::size_t i = 0; i < story.size(); ++i) {
    auto t = text::split_whitespace(story[i]);
    std::reverse(t.begin(), t.end());
    std::string line = detail::join(t);
    if (line == story[i] || std::find(translations.begin(), translations.end(), line) != translations.end())
      line += " [" + std::to_string(i + 1) + "]";
    translations.push_back(std::move(line));
  }
  for (const auto& s : story) reply += s + "\n";
  reply += "\n";
  for (std::size_t i = 0; i < translations.size(); ++i) {
    if (i) reply.push_back('\n');
    reply += translations[i];
  }
  return reply;
}

inline CompletionResult mock_complete(const PromptText& prompt) {
  return {prompt, mock_reply(prompt), "mock", false, 1};
}

/// Chat-completion client: cache lookup, rate limiting, bounded concurrency
/// and retry with exponential backoff. With no transport it answers from
/// mock_reply. Safe to call from many threads.
class Provider {
 public:
  Provider(ProviderConfig config, std::optional<std::filesystem::path> cache_dir,
           std::shared_ptr<Transport> transport = nullptr)
      : config_(std::move(config)),
        transport_(std::move(transport)),
        bucket_(config_.requests_per_minute),
        limiter_(config_.max_concurrency) {
    config_.validate();
    if (cache_dir) cache_.emplace(*cache_dir);
  }

  const ProviderConfig& config() const { return config_; }
  bool is_mock() const { return transport_ == nullptr; }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t cache_misses() const { return cache_misses_.load(); }
  int peak_in_flight() const { return limiter_.peak(); }

  CompletionResult complete(const PromptText& prompt) {
    const std::string key = cache_key(config_, prompt);
    if (cache_) {
      if (auto hit = cache_->get(key); hit && !hit->empty()) {
        ++cache_hits_;
        return {prompt, std::move(*hit), config_.model, true, 0};
      }
    }
    ++cache_misses_;
    CompletionResult result = transport_ ? request(prompt) : mock_result(prompt);
    if (text::trim_view(result.raw_text).empty())
      throw ProviderError(ProviderError::Kind::empty_completion, "empty completion for pair '" + prompt.pair_id + "'");
    if (cache_) cache_->put(key, result.raw_text);
    return result;
  }

 private:
  CompletionResult mock_result(const PromptText& prompt) {
    struct Gate {
      InFlightLimiter& l;
      explicit Gate(InFlightLimiter& x) : l(x) { l.acquire(); }
      ~Gate() { l.release(); }
    } gate(limiter_);
    auto r = mock_complete(prompt);
    r.model = config_.model;
    return r;
  }

  static bool is_transient(int status) { return status == 408 || status == 429 || status >= 500; }

  void backoff(int attempt) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    const double ceiling = config_.backoff_base.count() * static_cast<double>(1ULL << std::min(attempt - 1, 20));
    std::uniform_real_distribution<double> jitter(0.0, ceiling);
    std::this_thread::sleep_for(std::chrono::duration<double>(jitter(rng)));
  }

  CompletionResult request(const PromptText& prompt) {
    const std::string body = build_request_body(config_, prompt);
    const char* key = std::getenv(kApiKeyEnv);
    const std::string token = key ? key : "";
    std::string last_failure;
    const int max_attempts = config_.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      bucket_.acquire();
      HttpResponse response;
      try {
        limiter_.acquire();
        struct Release {
          InFlightLimiter& l;
          ~Release() { l.release(); }
        } release{limiter_};
        response = transport_->post_chat_completion(body, token, config_.request_timeout);
      } catch (const TransportError& e) {
        last_failure = e.what();
        if (attempt < max_attempts) backoff(attempt);
        continue;
      }
      if (response.status >= 200 && response.status < 300) {
        auto parsed = parse_response_body(response.body);
        if (text::trim_view(parsed.text).empty())
          throw ProviderError(ProviderError::Kind::empty_completion,
                              "empty completion for pair '" + prompt.pair_id + "'", response.status, response.body);
        return {prompt, std::move(parsed.text), parsed.model.empty() ? config_.model : parsed.model, false, attempt};
      }
      if (!is_transient(response.status))
        throw ProviderError(ProviderError::Kind::permanent, "HTTP " + std::to_string(response.status),
                            response.status, response.body);
      last_failure = "HTTP " + std::to_string(response.status);
      if (attempt < max_attempts) backoff(attempt);
    }
    throw ProviderError(ProviderError::Kind::transient_exhausted,
                        "gave up after " + std::to_string(max_attempts) + " attempts: " + last_failure);
  }

  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
  std::optional<DiskCache> cache_;
  TokenBucket bucket_;
  InFlightLimiter limiter_;
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> cache_misses_{0};
};

}  // namespace parasynth
