#include "cbi/llm_client.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

// TLS support is optional; without it the live client refuses https
// endpoints instead of failing at link time.
#ifdef CBI_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace cbi {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string prompt_digest(std::string_view text) {
  // FNV-1a, 64-bit.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

LlmClient::LlmClient(const ClientConfig& config) : config_(config) {
  const int limit = std::max(1, config_.max_in_flight);
  limiter_ = std::make_unique<std::counting_semaphore<>>(limit);
}

std::string LlmClient::complete(const ChatRequest& request) {
  limiter_->acquire();
  {
    std::lock_guard lock(mutex_);
    ++in_flight_;
    max_in_flight_observed_ = std::max(max_in_flight_observed_, in_flight_);
  }
  std::string response;
  try {
    response = do_complete(request);
  } catch (...) {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    limiter_->release();
    throw;
  }
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  limiter_->release();
  if (request.max_output_chars && response.size() > *request.max_output_chars) {
    response.resize(*request.max_output_chars);
  }
  write_transcript(request, response, "ok");
  return response;
}

UsageRecord LlmClient::usage() const {
  std::lock_guard lock(mutex_);
  return usage_;
}

int LlmClient::max_in_flight_observed() const {
  std::lock_guard lock(mutex_);
  return max_in_flight_observed_;
}

void LlmClient::set_transcript_path(std::filesystem::path path) {
  std::lock_guard lock(mutex_);
  transcript_path_ = std::move(path);
}

void LlmClient::record_attempt(const std::string& model_id) {
  std::lock_guard lock(mutex_);
  ++usage_.request_count;
  auto it = config_.price_per_call.find(model_id);
  if (it != config_.price_per_call.end()) {
    usage_.total_cost_estimate += it->second;
  }
}

void LlmClient::write_transcript(const ChatRequest& request,
                                 const std::string& response,
                                 const char* outcome) {
  std::lock_guard lock(mutex_);
  if (transcript_path_.empty()) {
    return;
  }
  // One JSON object per line; deliberately no wall-clock fields so mock runs
  // are byte-identical.
  json line = {{"digest", prompt_digest(request.user)},
               {"model", request.model_id},
               {"prompt", request.user},
               {"response", response},
               {"outcome", outcome}};
  std::ofstream out(transcript_path_, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(ErrorCode::IoError,
                "cannot write " + transcript_path_.string());
  }
  out << line.dump() << "\n";
}

MockLlmClient::MockLlmClient(std::map<std::string, std::string> script,
                             const ClientConfig& config)
    : LlmClient(config), script_(std::move(script)) {}

std::uint64_t MockLlmClient::call_count() const { return calls_.load(); }

std::string MockLlmClient::do_complete(const ChatRequest& request) {
  if (latency_.count() > 0) {
    std::this_thread::sleep_for(latency_);
  }
  calls_.fetch_add(1);
  record_attempt(request.model_id);
  const std::string digest = prompt_digest(request.user);
  if (auto it = script_.find(digest); it != script_.end()) {
    return it->second;
  }
  if (auto it = script_.find("*"); it != script_.end()) {
    return it->second;
  }
  throw Error(ErrorCode::ProtocolError,
              "mock script has no entry for prompt digest " + digest);
}

std::map<std::string, std::string> load_mock_script(
    const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ManifestError, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::ManifestError,
                path.string() + ": mock script must be a JSON object");
  }
  std::map<std::string, std::string> script;
  for (const auto& [digest, response] : doc.items()) {
    if (!response.is_string()) {
      throw Error(ErrorCode::ManifestError,
                  path.string() + ": response for " + digest +
                      " must be a string");
    }
    script[digest] = response.get<std::string>();
  }
  return script;
}

HttpLlmClient::HttpLlmClient(const ClientConfig& config,
                             std::unique_ptr<HttpTransport> transport)
    : LlmClient(config), transport_(std::move(transport)) {
  if (!transport_) {
    transport_ = make_httplib_transport();
  }
}

std::string HttpLlmClient::do_complete(const ChatRequest& request) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::AuthError,
                "environment variable " + config_.api_key_env + " is not set");
  }
  for (int tries = 0;; ++tries) {
    try {
      return attempt(request, key);
    } catch (const Error& e) {
      if (!is_retryable(e) || tries >= config_.max_retries) {
        throw;
      }
    }
    std::this_thread::sleep_for(config_.retry_backoff * (1LL << tries));
  }
}

std::string HttpLlmClient::attempt(const ChatRequest& request,
                                   const std::string& api_key) {
  record_attempt(request.model_id);
  const HttpResult result =
      transport_->post_json(config_.endpoint_url, api_key,
                            chat_request_to_json(request), config_.timeout);
  if (result.status == 200) {
    return parse_chat_response(result.body);
  }
  const std::string detail =
      "endpoint returned HTTP " + std::to_string(result.status);
  switch (result.status) {
    case 401:
    case 403:
      throw Error(ErrorCode::AuthError, detail, result.status);
    case 429:
      throw Error(ErrorCode::RateLimited, detail, result.status);
    default:
      throw Error(ErrorCode::ProtocolError, detail, result.status);
  }
}

bool is_retryable(const Error& error) {
  switch (error.code()) {
    case ErrorCode::TimeoutError:
    case ErrorCode::RateLimited:
      return true;
    case ErrorCode::ProtocolError:
      return error.http_status() >= 500;
    default:
      return false;
  }
}

std::string chat_request_to_json(const ChatRequest& request) {
  json messages = json::array();
  if (request.system) {
    messages.push_back({{"role", "system"}, {"content", *request.system}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user}});
  json body = {{"model", request.model_id},
               {"messages", std::move(messages)},
               {"temperature", request.temperature}};
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ProtocolError,
                std::string("malformed chat response: ") + e.what());
  }
  if (doc.contains("error")) {
    std::string message = "chat endpoint error";
    if (doc["error"].is_object() && doc["error"].contains("message")) {
      message += ": " + doc["error"]["message"].get<std::string>();
    }
    throw Error(ErrorCode::ProtocolError, message);
  }
  try {
    return doc.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError,
                std::string("malformed chat response: ") + e.what());
  }
}

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttpResult post_json(const std::string& url, const std::string& api_key,
                       const std::string& body,
                       std::chrono::milliseconds timeout) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "endpoint URL has no scheme: " + url);
    }
#ifndef CBI_HAVE_OPENSSL
    if (url.compare(0, scheme_end, "https") == 0) {
      throw Error(ErrorCode::ConfigError,
                  "built without TLS support; use an http endpoint or a "
                  "mock script");
    }
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string base =
        path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    const auto seconds =
        std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout -
                                                              seconds);
    client.set_connection_timeout(static_cast<time_t>(seconds.count()),
                                  static_cast<time_t>(micros.count()));
    client.set_read_timeout(static_cast<time_t>(seconds.count()),
                            static_cast<time_t>(micros.count()));
    client.set_write_timeout(static_cast<time_t>(seconds.count()),
                             static_cast<time_t>(micros.count()));
    httplib::Headers headers = {
        {"Authorization", "Bearer " + api_key},
    };
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
      switch (result.error()) {
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::Read:
        case httplib::Error::Write:
          throw Error(ErrorCode::TimeoutError,
                      "request timed out: " + httplib::to_string(result.error()));
        default:
          throw Error(ErrorCode::ProtocolError,
                      "transport failure: " + httplib::to_string(result.error()));
      }
    }
    return HttpResult{result->status, result->body};
  }
};

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport() {
  return std::make_unique<HttplibTransport>();
}

}  // namespace cbi
