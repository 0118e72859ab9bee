#include "parasynth/llm_provider.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "parasynth/response_parser.hpp"
#include "support/fixtures.hpp"
#include "support/scripted_transport.hpp"

namespace parasynth {
namespace {

using namespace std::chrono_literals;
using testing::ScriptedTransport;
using testing::table_pair;
using testing::TempDir;

ProviderConfig fast_config() {
  ProviderConfig c;
  c.backoff_base = 1ms;
  return c;
}

PromptText prompt(StrategyKind kind, int n) { return render_prompt({kind, n}, table_pair()); }

TEST(CacheKeyTest, IndependentOfEndpointAndTiming) {
  ProviderConfig a, b;
  b.base_url = "http://localhost:9999/v1";
  b.request_timeout = std::chrono::duration<double>(3.0);
  b.max_retries = 0;
  b.max_concurrency = 17;
  const auto p = prompt(StrategyKind::multi_target, 3);
  EXPECT_EQ(cache_key(a, p), cache_key(b, p));
  EXPECT_EQ(cache_key(a, p).size(), 64u);
}

TEST(CacheKeyTest, SensitiveToTextTemperatureModelAndTokens) {
  ProviderConfig c;
  auto p = prompt(StrategyKind::multi_target, 3);
  const auto base = cache_key(c, p);
  auto q = p;
  q.text.back() = '!';
  EXPECT_NE(cache_key(c, q), base);

  ProviderConfig warm = c, hot = c;
  warm.temperature = 0.7;
  hot.temperature = 1.0;
  EXPECT_NE(cache_key(warm, p), cache_key(hot, p));

  ProviderConfig other_model = c;
  other_model.model = "gpt-4o-mini";
  EXPECT_NE(cache_key(other_model, p), base);

  ProviderConfig fewer = c;
  fewer.max_output_tokens = 64;
  EXPECT_NE(cache_key(fewer, p), base);
}

TEST(Sha256Test, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DiskCacheTest, PutThenGet) {
  TempDir dir;
  DiskCache cache(dir / "c");
  EXPECT_FALSE(cache.get("k").has_value());
  cache.put("k", "reply bytes\n");
  EXPECT_EQ(cache.get("k").value(), "reply bytes\n");
  EXPECT_EQ(detail::read_file(dir / "c" / "k"), "reply bytes\n");
  // No temp files left behind.
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir / "c"), std::filesystem::directory_iterator()), 1);
}

TEST(MockTest, MultiTargetHasExactlyNNumberedLines) {
  const auto reply = mock_reply(prompt(StrategyKind::multi_target, 3));
  const auto lines = text::split_lines(reply);
  ASSERT_EQ(lines.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(lines[i].starts_with(std::to_string(i + 1) + ". "));
  const auto parsed = parse_variants(reply, 3);
  EXPECT_EQ(parsed.items.size(), 3u);
  EXPECT_TRUE(parsed.warnings.empty());
}

TEST(MockTest, VariantsDifferFromOriginalAndEachOther) {
  for (int n : {1, 2, 5, 9}) {
    for (auto kind : {StrategyKind::paraphrase_src, StrategyKind::paraphrase_tgt, StrategyKind::multi_target}) {
      const auto p = prompt(kind, n);
      const auto items = parse_variants(mock_reply(p), n).items;
      ASSERT_EQ(static_cast<int>(items.size()), n);
      const std::string original = p.text.substr(0, p.text.find('\n'));
      for (std::size_t i = 0; i < items.size(); ++i) {
        EXPECT_NE(items[i], original);
        for (std::size_t j = 0; j < i; ++j) EXPECT_NE(items[i], items[j]);
      }
    }
  }
}

TEST(MockTest, SingleWordSentenceStillYieldsDistinctVariants) {
  auto pair = table_pair();
  pair.source = "Ja";
  const auto items = parse_variants(mock_reply(render_prompt({StrategyKind::paraphrase_src, 3}, pair)), 3).items;
  ASSERT_EQ(items.size(), 3u);
  EXPECT_NE(items[0], "Ja");
  EXPECT_NE(items[0], items[1]);
}

TEST(MockTest, StorytellingBlockFormat) {
  const auto reply = mock_reply(prompt(StrategyKind::storytelling, 3));
  const auto lines = text::split_lines(reply);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_TRUE(lines[3].empty());
  const auto parsed = parse_story(reply, 3);
  EXPECT_EQ(parsed.story_pairs.size(), 3u);
  EXPECT_TRUE(parsed.warnings.empty());
}

TEST(MockTest, Deterministic) {
  for (auto kind : {StrategyKind::paraphrase_src, StrategyKind::multi_target, StrategyKind::storytelling}) {
    const auto p = prompt(kind, 3);
    EXPECT_EQ(mock_complete(p).raw_text, mock_complete(p).raw_text);
  }
  const auto a = mock_reply(prompt(StrategyKind::paraphrase_src, 3));
  const auto b = mock_reply(prompt(StrategyKind::paraphrase_src, 4));
  EXPECT_NE(a, b);
}

TEST(ProviderTest, MockSecondCallIsCached) {
  TempDir dir;
  Provider provider(fast_config(), dir / "cache");
  const auto p = prompt(StrategyKind::multi_target, 3);
  const auto first = provider.complete(p);
  EXPECT_FALSE(first.cached);
  EXPECT_EQ(first.attempts, 1);
  const auto second = provider.complete(p);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(second.attempts, 0);
  EXPECT_EQ(first.raw_text, second.raw_text);
  EXPECT_EQ(provider.cache_hits(), 1u);
  EXPECT_EQ(detail::read_file(dir / "cache" / cache_key(fast_config(), p)), first.raw_text);
}

TEST(ProviderTest, CacheIsSharedAcrossProviderInstances) {
  TempDir dir;
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{}, "1. Hallo");
  const auto p = prompt(StrategyKind::paraphrase_tgt, 1);
  Provider(fast_config(), dir / "cache", transport).complete(p);
  Provider again(fast_config(), dir / "cache", transport);
  const auto r = again.complete(p);
  EXPECT_TRUE(r.cached);
  EXPECT_EQ(r.raw_text, "1. Hallo");
  EXPECT_EQ(transport->calls(), 1);
}

TEST(ProviderTest, RetriesOn429ThenSucceeds) {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{429, "slow down"}, {429, "slow down"}}, "1. Wie viel Darlehen möchten Sie?");
  Provider provider(fast_config(), std::nullopt, transport);
  const auto r = provider.complete(prompt(StrategyKind::multi_target, 1));
  EXPECT_EQ(r.attempts, 3);
  EXPECT_FALSE(r.cached);
  EXPECT_EQ(r.raw_text, "1. Wie viel Darlehen möchten Sie?");
  EXPECT_EQ(r.model, "gpt-3.5-turbo-0613");
  EXPECT_EQ(transport->calls(), 3);
}

TEST(ProviderTest, RetriesOnServerErrorsAndTimeouts) {
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{503, ""}, {0, ""}, {500, ""}});
  Provider provider(fast_config(), std::nullopt, transport);
  EXPECT_EQ(provider.complete(prompt(StrategyKind::multi_target, 1)).attempts, 4);
}

TEST(ProviderTest, UnauthorizedIsPermanentWithoutRetry) {
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{401, "{\"error\":\"bad key\"}"}});
  Provider provider(fast_config(), std::nullopt, transport);
  try {
    provider.complete(prompt(StrategyKind::multi_target, 1));
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind, ProviderError::Kind::permanent);
    EXPECT_EQ(e.status, 401);
    EXPECT_EQ(e.body, "{\"error\":\"bad key\"}");
  }
  EXPECT_EQ(transport->calls(), 1);
}

TEST(ProviderTest, RetriesExhausted) {
  auto config = fast_config();
  config.max_retries = 2;
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>(5, {429, ""}));
  Provider provider(config, std::nullopt, transport);
  try {
    provider.complete(prompt(StrategyKind::multi_target, 1));
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind, ProviderError::Kind::transient_exhausted);
  }
  EXPECT_EQ(transport->calls(), 3);
}

TEST(ProviderTest, EmptyCompletionIsError) {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{200, testing::completion_body("  \n")}});
  TempDir dir;
  Provider provider(fast_config(), dir / "cache", transport);
  const auto p = prompt(StrategyKind::multi_target, 1);
  try {
    provider.complete(p);
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind, ProviderError::Kind::empty_completion);
  }
  EXPECT_FALSE(DiskCache(dir / "cache").get(cache_key(fast_config(), p)).has_value());
}

TEST(ProviderTest, MalformedBodyIsPermanent) {
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, "{\"choices\":[]}"}});
  Provider provider(fast_config(), std::nullopt, transport);
  EXPECT_THROW(provider.complete(prompt(StrategyKind::multi_target, 1)), ProviderError);
}

TEST(ProviderTest, RequestBodyIsSingleUserMessage) {
  auto config = fast_config();
  config.temperature = 0.7;
  config.max_output_tokens = 128;
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{});
  Provider provider(config, std::nullopt, transport);
  const auto p = prompt(StrategyKind::storytelling, 3);
  provider.complete(p);
  const auto body = nlohmann::json::parse(transport->bodies().at(0));
  EXPECT_EQ(body["model"], "gpt-3.5-turbo");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(body["max_tokens"], 128);
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], p.text);
}

TEST(ProviderTest, BearerTokenComesFromEnvironment) {
  ::setenv(kApiKeyEnv, "sk-test", 1);
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{});
  Provider(fast_config(), std::nullopt, transport).complete(prompt(StrategyKind::multi_target, 1));
  ::unsetenv(kApiKeyEnv);
  EXPECT_EQ(transport->tokens().at(0), "sk-test");
}

TEST(ProviderTest, ConcurrencyIsBounded) {
  auto config = fast_config();
  config.max_concurrency = 3;
  auto transport = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{}, "1. x", 20ms);
  Provider provider(config, std::nullopt, transport);
  std::vector<std::jthread> threads;
  for (int t = 0; t < 10; ++t)
    threads.emplace_back([&, t] {
      auto p = prompt(StrategyKind::multi_target, 1);
      p.text += std::to_string(t);
      provider.complete(p);
    });
  threads.clear();
  EXPECT_EQ(transport->calls(), 10);
  EXPECT_LE(transport->peak_in_flight(), 3);
  EXPECT_LE(provider.peak_in_flight(), 3);
  EXPECT_GE(provider.peak_in_flight(), 2);
}

TEST(TokenBucketTest, SpacesRequestsByRate) {
  TokenBucket bucket(600);  // one every 100 ms
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) bucket.acquire();
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, 390ms);
  EXPECT_LT(elapsed, 2s);
}

TEST(TokenBucketTest, UnlimitedDoesNotWait) {
  TokenBucket bucket(std::nullopt);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) bucket.acquire();
  EXPECT_LT(std::chrono::steady_clock::now() - start, 100ms);
}

TEST(ProviderConfigTest, Validation) {
  ProviderConfig c;
  c.temperature = 2.5;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.max_concurrency = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.requests_per_minute = 0;
  EXPECT_THROW(c.validate(), UsageError);
  EXPECT_NO_THROW(ProviderConfig{}.validate());
}

}  // namespace
}  // namespace parasynth
