#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "cbi/errors.hpp"

namespace cbi {

struct ChatRequest {
  std::string model_id;
  std::optional<std::string> system;
  std::string user;
  double temperature = 0.0;  // in [0, 2]
  std::optional<std::size_t> max_output_chars;
};

struct ClientConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "CBI_LLM_API_KEY";
  std::chrono::milliseconds timeout = std::chrono::seconds(120);
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff = std::chrono::milliseconds(500);
  int max_in_flight = 4;
  std::map<std::string, double> price_per_call;  // model id -> USD per call
};

struct UsageRecord {
  std::uint64_t request_count = 0;   // attempts that reached the wire
  double total_cost_estimate = 0.0;  // USD, from the per-call price table
};

/// Stable 64-bit digest of a prompt (FNV-1a), used to key mock scripts and
/// transcript entries. Returned as a 16-char lowercase hex string.
std::string prompt_digest(std::string_view text);

/// Provider-agnostic chat-completion boundary. complete() enforces the
/// in-flight limit, tracks usage, and optionally appends one JSON line per
/// call to a transcript file.
class LlmClient {
 public:
  explicit LlmClient(const ClientConfig& config);
  virtual ~LlmClient() = default;

  std::string complete(const ChatRequest& request);

  UsageRecord usage() const;
  int max_in_flight_observed() const;
  void set_transcript_path(std::filesystem::path path);

 protected:
  virtual std::string do_complete(const ChatRequest& request) = 0;
  void record_attempt(const std::string& model_id);

  ClientConfig config_;

 private:
  void write_transcript(const ChatRequest& request, const std::string& response,
                        const char* outcome);

  mutable std::mutex mutex_;
  UsageRecord usage_;
  std::unique_ptr<std::counting_semaphore<>> limiter_;
  int in_flight_ = 0;
  int max_in_flight_observed_ = 0;
  std::filesystem::path transcript_path_;
};

/// Deterministic scripted client for hermetic tests and --mock-script runs.
/// The script maps prompt digests to responses; the "*" key, when present,
/// answers any unscripted prompt. Never touches the network.
class MockLlmClient : public LlmClient {
 public:
  MockLlmClient(std::map<std::string, std::string> script,
                const ClientConfig& config = {});

  std::uint64_t call_count() const;
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  std::map<std::string, std::string> script_;
  std::atomic<std::uint64_t> calls_{0};
  std::chrono::milliseconds latency_{0};
};

/// Mock script file: a flat JSON object { "<digest>": "<response>", ... }.
std::map<std::string, std::string> load_mock_script(
    const std::filesystem::path& path);

struct HttpResult {
  int status = 0;
  std::string body;
};

/// Transport seam under HttpLlmClient; transport failures are thrown as
/// Error with code TimeoutError or ProtocolError.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post_json(const std::string& url,
                               const std::string& api_key,
                               const std::string& body,
                               std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<HttpTransport> make_httplib_transport();

/// Live client speaking the common chat-completion JSON shape (messages
/// array, model string, temperature). Retries with exponential backoff on
/// timeouts, 429 and 5xx; auth failures and other 4xx are not retried.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(const ClientConfig& config,
                         std::unique_ptr<HttpTransport> transport = nullptr);

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  std::string attempt(const ChatRequest& request, const std::string& api_key);

  std::unique_ptr<HttpTransport> transport_;
};

/// True for the error classes a client may retry: timeouts, rate limits and
/// 5xx-class protocol errors. Auth errors are never transient.
bool is_retryable(const Error& error);

std::string chat_request_to_json(const ChatRequest& request);
std::string parse_chat_response(const std::string& body);

}  // namespace cbi
