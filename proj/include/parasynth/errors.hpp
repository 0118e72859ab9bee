#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace parasynth {

struct Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed corpus input or an invariant violation. line is 1-based, 0 when
// the problem is not tied to a single record.
struct CorpusError : public Error {
  std::size_t line;
  explicit CorpusError(const std::string& message, std::size_t line_ = 0)
      : Error(line_ ? "line " + std::to_string(line_) + ": " + message : message), line(line_) {}
};

struct IoError : public Error {
  using Error::Error;
};

struct PromptError : public Error {
  using Error::Error;
};

struct ProviderError : public Error {
  enum class Kind { permanent, transient_exhausted, empty_completion };
  Kind kind;
  int status;
  std::string body;
  ProviderError(Kind kind_, const std::string& message, int status_ = 0, std::string body_ = {})
      : Error(message), kind(kind_), status(status_), body(std::move(body_)) {}
};

struct ParseError : public Error {
  std::string raw;
  ParseError(const std::string& message, std::string raw_) : Error(message), raw(std::move(raw_)) {}
};

struct InsufficientPoolError : public Error {
  std::size_t available;
  std::size_t required;
  InsufficientPoolError(std::size_t available_, std::size_t required_)
      : Error("insufficient synthetic pool: " + std::to_string(available_) + " available, " +
              std::to_string(required_) + " required"),
        available(available_),
        required(required_) {}
};

struct MetricError : public Error {
  using Error::Error;
};

struct UsageError : public Error {
  using Error::Error;
};

}  // namespace parasynth
