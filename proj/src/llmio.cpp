#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "reviewguard/llmio/client.hpp"
#include "reviewguard/util/jsonl.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::llmio {

namespace fs = std::filesystem;

Millis RetryPolicy::delay_before(int attempt) const {
  if (attempt <= 1) return Millis{0};
  const double factor = std::pow(multiplier, attempt - 2);
  return Millis{static_cast<Millis::rep>(std::llround(static_cast<double>(backoff_base.count()) * factor))};
}

void BackendConfig::validate() const {
  if (base_url.empty()) throw ValidationError("backend config: base_url is required");
  if (!(temperature >= 0.0)) throw ValidationError("backend config: temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("backend config: top_p must be in (0, 1]");
  if (max_in_flight <= 0 || max_in_flight > 1024) {
    throw ValidationError("backend config: max_in_flight must be in 1..1024");
  }
  if (requests_per_minute <= 0) throw ValidationError("backend config: requests_per_minute must be > 0");
  if (timeout.count() <= 0) throw ValidationError("backend config: timeout must be > 0");
  if (retry.max_attempts <= 0) throw ValidationError("backend config: retry.max_attempts must be > 0");
  if (retry.backoff_base.count() < 0 || retry.multiplier < 1.0) {
    throw ValidationError("backend config: invalid backoff");
  }
  if (batch_size == 0) throw ValidationError("backend config: batch_size must be > 0");
}

BackendConfig backend_config_from_json(const json& j) {
  BackendConfig c;
  c.base_url = j.at("base_url").get<std::string>();
  c.auth_env = j.value("auth_env", std::string{});
  c.model_id = j.value("model_id", std::string{});
  c.temperature = j.value("temperature", c.temperature);
  c.top_p = j.value("top_p", c.top_p);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
  c.timeout = Millis{j.value("timeout_ms", static_cast<std::int64_t>(c.timeout.count()))};
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.backoff_base =
        Millis{r.value("backoff_base_ms", static_cast<std::int64_t>(c.retry.backoff_base.count()))};
    c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
  }
  if (j.contains("api_key") || j.contains("token")) {
    throw ValidationError("backend config must not carry secrets; use auth_env");
  }
  c.validate();
  return c;
}

json to_json(const BackendConfig& c) {
  return json{{"base_url", c.base_url},
              {"auth_env", c.auth_env},
              {"model_id", c.model_id},
              {"temperature", c.temperature},
              {"top_p", c.top_p},
              {"max_in_flight", c.max_in_flight},
              {"requests_per_minute", c.requests_per_minute},
              {"timeout_ms", c.timeout.count()},
              {"batch_size", c.batch_size},
              {"retry",
               {{"max_attempts", c.retry.max_attempts},
                {"backoff_base_ms", c.retry.backoff_base.count()},
                {"multiplier", c.retry.multiplier}}}};
}

BackendConfig load_backend_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(jsonl::read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("backend config " + path.string() + ": " + e.what());
  }
  try {
    return backend_config_from_json(j);
  } catch (const json::exception& e) {
    throw ValidationError("backend config " + path.string() + ": " + e.what());
  }
}

// ---- transport -------------------------------------------------------------

namespace {

class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("base_url needs a scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  HttpResponse send(const HttpRequest& request, Millis timeout) override {
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    const auto path = prefix_ + request.path;
    const auto started = std::chrono::steady_clock::now();
    httplib::Result res = request.method == "GET"
                              ? client.Get(path, headers)
                              : client.Post(path, headers, request.body, "application/json");
    HttpResponse out;
    if (!res) {
      out.error = httplib::to_string(res.error());
      out.timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                      std::chrono::steady_clock::now() - started >= timeout;
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::string origin_;
  std::string prefix_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const std::string& base_url) {
  return std::make_shared<HttplibTransport>(base_url);
}

// ---- clocks and rate limiting ----------------------------------------------

void SystemClock::sleep_for(Millis d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

Clock::time_point SimulatedClock::now() {
  std::lock_guard lk(mu_);
  return time_point{} + offset_;
}

void SimulatedClock::advance(Millis d) {
  std::lock_guard lk(mu_);
  offset_ += d;
}

Millis SimulatedClock::elapsed() {
  std::lock_guard lk(mu_);
  return offset_;
}

RateLimiter::RateLimiter(int per_minute, std::shared_ptr<Clock> clock)
    : per_minute_(per_minute), clock_(std::move(clock)) {
  if (per_minute_ <= 0) throw ValidationError("rate limit must be > 0 per minute");
}

void RateLimiter::acquire() {
  constexpr auto kWindow = std::chrono::minutes(1);
  std::unique_lock lk(mu_);
  for (;;) {
    const auto now = clock_->now();
    while (!window_.empty() && now - window_.front() >= kWindow) window_.pop_front();
    if (static_cast<int>(window_.size()) < per_minute_) {
      window_.push_back(now);
      return;
    }
    const auto wait = std::chrono::ceil<Millis>(window_.front() + kWindow - now);
    lk.unlock();
    clock_->sleep_for(wait);
    lk.lock();
  }
}

// ---- call log --------------------------------------------------------------

json to_json(const CallRecord& r) {
  json j{{"request_hash", r.request_hash}, {"model_id", r.model_id}, {"endpoint", r.endpoint},
         {"latency_ms", r.latency_ms},     {"attempt", r.attempt},   {"status", r.status},
         {"outcome", r.outcome}};
  j["usage"] = r.usage ? *r.usage : json(nullptr);
  return j;
}

CallLog::CallLog(std::optional<fs::path> file) : file_(std::move(file)) {}

void CallLog::append(const CallRecord& record) {
  std::lock_guard lk(mu_);
  records_.push_back(record);
  if (file_) jsonl::append(*file_, to_json(record));
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lk(mu_);
  return records_;
}

std::size_t CallLog::size() const {
  std::lock_guard lk(mu_);
  return records_.size();
}

// ---- caller ----------------------------------------------------------------

bool is_retryable_status(int status) {
  return status == 0 || status == 408 || status == 425 || status == 429 || status >= 500;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
}

HttpCaller::HttpCaller(CallerOptions options, std::shared_ptr<Transport> transport,
                       std::shared_ptr<Clock> clock, std::shared_ptr<CallLog> log, EnvLookup env)
    : options_(std::move(options)),
      transport_(std::move(transport)),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      log_(log ? std::move(log) : std::make_shared<CallLog>()),
      env_(env ? std::move(env) : process_env()),
      limiter_(options_.requests_per_minute, clock_),
      in_flight_(std::clamp(options_.max_in_flight, 1, 1024)) {}

HttpCaller::Result HttpCaller::call(HttpRequest request) {
  if (!options_.auth_env.empty()) {
    auto token = env_(options_.auth_env);
    if (!token) throw AuthError("auth missing: environment variable " + options_.auth_env + " is not set", 0, 0);
    request.headers.emplace_back("Authorization", "Bearer " + *token);
  }
  const auto hash = sha256_hex(request.method + " " + request.path + "\n" + request.body);
  std::string attempt_log;
  HttpResponse last;
  const int max_attempts = std::max(1, options_.retry.max_attempts);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    clock_->sleep_for(options_.retry.delay_before(attempt));
    limiter_.acquire();
    in_flight_.acquire();
    const auto started = clock_->now();
    try {
      last = transport_->send(request, options_.timeout);
    } catch (const std::exception& e) {
      last = HttpResponse{};
      last.error = e.what();
    }
    const auto finished = clock_->now();
    in_flight_.release();

    CallRecord record;
    record.request_hash = hash;
    record.model_id = options_.model_id;
    record.endpoint = request.path;
    record.latency_ms = std::chrono::duration<double, std::milli>(finished - started).count();
    record.attempt = attempt;
    record.status = last.status;
    const bool ok = last.status >= 200 && last.status < 300;
    if (ok) {
      record.outcome = "ok";
      try {
        auto body = json::parse(last.body);
        if (body.is_object() && body.contains("usage")) record.usage = body["usage"];
      } catch (const json::exception&) {
      }
    } else if (last.status == 401 || last.status == 403) {
      record.outcome = "auth";
    } else if (is_retryable_status(last.status)) {
      record.outcome = last.timed_out ? "timeout" : "retryable";
    } else {
      record.outcome = "fatal";
    }
    log_->append(record);
    attempt_log += "attempt " + std::to_string(attempt) + ": " +
                   (last.status ? "HTTP " + std::to_string(last.status) : last.error) + "; ";

    if (ok) return Result{std::move(last), std::move(record)};
    if (record.outcome == "auth") {
      throw AuthError("authentication rejected (HTTP " + std::to_string(last.status) + ") at " + request.path,
                      attempt, last.status);
    }
    if (record.outcome == "fatal") {
      throw BackendError("non-retryable HTTP " + std::to_string(last.status) + " at " + request.path +
                             ": " + last.body.substr(0, 512),
                         attempt, last.status);
    }
  }
  const std::string msg = "exhausted " + std::to_string(max_attempts) + " attempts at " + request.path + " (" +
                          attempt_log + ")";
  if (last.timed_out) throw TimeoutError("timeout: " + msg, max_attempts, last.status);
  throw BackendError(msg, max_attempts, last.status);
}

// ---- client ----------------------------------------------------------------

namespace {

CallerOptions caller_options(const BackendConfig& c) {
  c.validate();
  return CallerOptions{c.model_id, c.auth_env, c.max_in_flight, c.requests_per_minute, c.timeout, c.retry};
}

}  // namespace

Client::Client(BackendConfig config, ClientOptions options)
    : config_(std::move(config)),
      caller_(caller_options(config_),
              options.transport ? options.transport : make_http_transport(config_.base_url),
              options.clock, options.log, options.env) {}

json Client::post_json(const std::string& path, const json& body, CallRecord* record) {
  HttpRequest req;
  req.method = "POST";
  req.path = path;
  req.body = body.dump();
  req.headers.emplace_back("Content-Type", "application/json");
  auto result = caller_.call(std::move(req));
  if (record) *record = result.record;
  try {
    return json::parse(result.response.body);
  } catch (const json::parse_error& e) {
    throw BackendError(path + ": response is not JSON: " + e.what(), result.record.attempt, result.response.status);
  }
}

ChatResult Client::chat(const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  json body{{"model", config_.model_id},
            {"messages", msgs},
            {"temperature", config_.temperature},
            {"top_p", config_.top_p}};
  ChatResult out;
  auto reply = post_json("/chat/completions", body, &out.record);
  try {
    out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("/chat/completions: unexpected response shape: ") + e.what(),
                       out.record.attempt, out.record.status);
  }
  return out;
}

std::vector<std::vector<double>> Client::embed(const std::vector<std::string>& texts) {
  try {
    std::vector<std::vector<double>> out;
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
      const auto end = std::min(texts.size(), start + config_.batch_size);
      json batch(std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                          texts.begin() + static_cast<std::ptrdiff_t>(end)));
      auto reply = post_json("/embed", json{{"model", config_.model_id}, {"texts", batch}});
      const auto& vecs = reply.at("embeddings");
      if (!vecs.is_array() || vecs.size() != end - start) {
        throw BackendError("/embed: expected one vector per input text", 1, 200);
      }
      for (const auto& v : vecs) out.push_back(v.get<std::vector<double>>());
    }
    return out;
  } catch (const json::exception& e) {
    throw BackendError(std::string("/embed: unexpected response shape: ") + e.what(), 1, 200);
  }
}

ClassifyResult Client::classify(const std::vector<std::string>& texts) {
  try {
    ClassifyResult out;
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
      const auto end = std::min(texts.size(), start + config_.batch_size);
      json batch(std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                          texts.begin() + static_cast<std::ptrdiff_t>(end)));
      auto reply = post_json("/classify", json{{"model", config_.model_id}, {"texts", batch}});
      auto labels = reply.at("labels").get<std::vector<std::string>>();
      if (out.labels.empty()) {
        out.labels = labels;
      } else if (labels != out.labels) {
        throw BackendError("/classify: label order changed between batches", 1, 200);
      }
      const auto& scores = reply.at("scores");
      if (!scores.is_array() || scores.size() != end - start) {
        throw BackendError("/classify: expected one score row per input text", 1, 200);
      }
      for (const auto& row : scores) out.scores.push_back(row.get<std::vector<double>>());
    }
    return out;
  } catch (const json::exception& e) {
    throw BackendError(std::string("/classify: unexpected response shape: ") + e.what(), 1, 200);
  }
}

TokenLogprobs Client::token_logprobs(const std::string& text) {
  try {
    auto reply = post_json("/score", json{{"model", config_.model_id}, {"text", text}});
    TokenLogprobs out;
    for (const auto& t : reply.at("tokens")) {
      out.tokens.push_back(TokenRecord{t.at("lp_observer").get<double>(), t.at("ce_cross").get<double>()});
    }
    if (reply.contains("n_tokens") &&
        reply.at("n_tokens").get<std::size_t>() != out.tokens.size()) {
      throw BackendError("/score: token record count differs from declared n_tokens", 1, 200);
    }
    if (reply.contains("top_k") && !reply.at("top_k").is_null()) out.top_k = reply.at("top_k").get<int>();
    return out;
  } catch (const json::exception& e) {
    throw BackendError(std::string("/score: unexpected response shape: ") + e.what(), 1, 200);
  }
}

}  // namespace reviewguard::llmio
