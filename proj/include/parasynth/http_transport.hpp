#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>

#include "parasynth/errors.hpp"
#include "parasynth/llm_provider.hpp"

namespace parasynth {

/// Transport backed by cpp-httplib. POSTs to {base_url}/chat/completions.
class HttpLibTransport : public Transport {
 public:
  explicit HttpLibTransport(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw UsageError("base URL needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    path_ = path_start == std::string::npos ? std::string() : base_url.substr(path_start);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/chat/completions";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (base_url.starts_with("https://")) throw UsageError("this build has no TLS support: " + base_url);
#endif
  }

  const std::string& path() const { return path_; }

  HttpResponse post_chat_completion(const std::string& body, const std::string& bearer_token,
                                    std::chrono::duration<double> timeout) override {
    httplib::Client client(origin_);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) throw TransportError("request to " + origin_ + path_ + " failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  }

 private:
  std::string origin_;
  std::string path_;
};

}  // namespace parasynth
