#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reviewguard/error.hpp"

namespace reviewguard::llmio {

using nlohmann::json;
using Millis = std::chrono::milliseconds;

struct RetryPolicy {
  int max_attempts = 3;
  Millis backoff_base{500};
  double multiplier = 2.0;

  // Wait before attempt `attempt` (1-based): 0 for the first attempt, then
  // backoff_base * multiplier^(attempt - 2).
  Millis delay_before(int attempt) const;
};

// One backend document. Secrets never live here: `auth_env` names the
// environment variable holding the bearer token (empty = no auth).
struct BackendConfig {
  std::string base_url;
  std::string auth_env;
  std::string model_id;
  double temperature = 0.85;
  double top_p = 1.0;
  int max_in_flight = 4;
  int requests_per_minute = 60;
  Millis timeout{60000};
  RetryPolicy retry;
  std::size_t batch_size = 32;

  void validate() const;
};

BackendConfig backend_config_from_json(const json& j);
json to_json(const BackendConfig& cfg);
BackendConfig load_backend_config(const std::filesystem::path& path);

struct HttpRequest {
  std::string method = "POST";
  std::string path;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct HttpResponse {
  int status = 0;  // 0 = transport failure
  std::string body;
  std::string error;
  bool timed_out = false;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse send(const HttpRequest& request, Millis timeout) = 0;
};

// cpp-httplib transport rooted at `base_url` (scheme, host, port, optional path prefix).
std::shared_ptr<Transport> make_http_transport(const std::string& base_url);

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(Millis d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_for(Millis d) override;
};

// Time only advances through sleep_for/advance.
class SimulatedClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(Millis d) override { advance(d); }
  void advance(Millis d);
  Millis elapsed();

 private:
  std::mutex mu_;
  Millis offset_{0};
};

// At most `per_minute` acquisitions in any 60 s window.
class RateLimiter {
 public:
  RateLimiter(int per_minute, std::shared_ptr<Clock> clock);
  void acquire();

 private:
  int per_minute_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<Clock::time_point> window_;
};

struct CallRecord {
  std::string request_hash;
  std::string model_id;
  std::string endpoint;
  double latency_ms = 0.0;
  int attempt = 0;
  int status = 0;
  std::optional<json> usage;
  std::string outcome;  // "ok", "retryable", "fatal", "auth"
};

json to_json(const CallRecord& r);

// Thread-safe sink; mirrors every record to a JSONL file when given a path.
class CallLog {
 public:
  explicit CallLog(std::optional<std::filesystem::path> file = std::nullopt);
  void append(const CallRecord& record);
  std::vector<CallRecord> records() const;
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

class BackendError : public Error {
 public:
  BackendError(const std::string& what, int attempts, int last_status)
      : Error(what), attempts_(attempts), last_status_(last_status) {}
  int attempts() const noexcept { return attempts_; }
  int last_status() const noexcept { return last_status_; }

 private:
  int attempts_;
  int last_status_;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

bool is_retryable_status(int status);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

struct CallerOptions {
  std::string model_id;
  std::string auth_env;
  int max_in_flight = 4;
  int requests_per_minute = 60;
  Millis timeout{60000};
  RetryPolicy retry;
};

// Retrying HTTP caller shared by every backend kind. Exactly one CallRecord
// is logged per attempt that reaches the transport.
class HttpCaller {
 public:
  HttpCaller(CallerOptions options, std::shared_ptr<Transport> transport,
             std::shared_ptr<Clock> clock, std::shared_ptr<CallLog> log, EnvLookup env);

  struct Result {
    HttpResponse response;
    CallRecord record;
  };

  // Returns the first 2xx response. Throws AuthError on a missing token or a
  // 401/403, BackendError on non-retryable statuses or exhausted retries, and
  // TimeoutError when the final attempt timed out.
  Result call(HttpRequest request);

  CallLog& log() { return *log_; }
  Clock& clock() { return *clock_; }

 private:
  CallerOptions options_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Clock> clock_;
  std::shared_ptr<CallLog> log_;
  EnvLookup env_;
  RateLimiter limiter_;
  std::counting_semaphore<1024> in_flight_;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatResult {
  std::string text;
  CallRecord record;
};

struct ClassifyResult {
  std::vector<std::string> labels;               // backend label order
  std::vector<std::vector<double>> scores;       // one row per input text
};

struct TokenRecord {
  double lp_observer = 0.0;  // observer log-probability of the observed token
  double ce_cross = 0.0;     // performer-vs-observer cross-entropy at this position
};

struct TokenLogprobs {
  std::vector<TokenRecord> tokens;
  std::optional<int> top_k;  // declared when the backend renormalized top-k mass
};

struct ClientOptions {
  std::shared_ptr<Transport> transport;  // defaults to an HTTP transport on base_url
  std::shared_ptr<Clock> clock;          // defaults to SystemClock
  std::shared_ptr<CallLog> log;          // defaults to an in-memory log
  EnvLookup env;                         // defaults to the process environment
};

// Client for chat-completion (OpenAI-compatible `/chat/completions`),
// `/embed`, `/classify` and `/score` backends. Batch calls preserve input order.
class Client {
 public:
  explicit Client(BackendConfig config, ClientOptions options = {});

  ChatResult chat(const std::vector<ChatMessage>& messages);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);
  ClassifyResult classify(const std::vector<std::string>& texts);
  TokenLogprobs token_logprobs(const std::string& text);

  const BackendConfig& config() const { return config_; }
  CallLog& log() { return caller_.log(); }
  Clock& clock() { return caller_.clock(); }

 private:
  json post_json(const std::string& path, const json& body, CallRecord* record = nullptr);

  BackendConfig config_;
  HttpCaller caller_;
};

}  // namespace reviewguard::llmio
