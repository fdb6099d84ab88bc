#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbi {

enum class ErrorCode {
  // coverage
  InvalidPath,
  NoFailingExecution,
  DuplicateExecutionId,
  EmptyCandidateSet,
  UnknownFile,
  MalformedGcovLine,
  // summarize
  EmptyDocument,
  SummaryEmpty,
  StoreCorrupt,
  IoError,
  // prompt
  MissingSection,
  InvalidToggles,
  // llm client
  AuthError,
  TimeoutError,
  RateLimited,
  ProtocolError,
  // eval / cli
  ManifestError,
  EmptyResults,
  ConfigError,
};

std::string_view error_code_name(ErrorCode code);

/// All failures in this library are reported as Error; code() identifies the
/// failure class so callers and tests can dispatch without string matching.
/// http_status() carries the response status for client errors (0 otherwise).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int http_status = 0)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        http_status_(http_status) {}

  ErrorCode code() const noexcept { return code_; }
  int http_status() const noexcept { return http_status_; }

 private:
  ErrorCode code_;
  int http_status_;
};

}  // namespace cbi
