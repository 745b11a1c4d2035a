#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "reviewguard/corpus/store.hpp"
#include "reviewguard/datasets/dataset.hpp"
#include "reviewguard/llmio/client.hpp"

namespace rgtest {

namespace fs = std::filesystem;
using nlohmann::json;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// httplib server on an ephemeral loopback port, served from a background thread.
class MockServer {
 public:
  MockServer() = default;
  ~MockServer();
  httplib::Server& http() { return server_; }
  void start();
  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = -1;
  std::thread thread_;
};

// Note listing in the OpenReview v2 shape, one submission list per venueid.
class MockOpenReview {
 public:
  MockOpenReview();
  void add(const std::string& venueid, json note);
  void include_count(bool on) { include_count_ = on; }
  // The next `times` requests for `offset` answer with `status`.
  void fail_at(std::int64_t offset, int status, int times);
  std::vector<std::string> requests() const;
  std::string base_url() const { return server_.base_url(); }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<json>> notes_;
  std::map<std::int64_t, std::pair<int, int>> failures_;
  std::vector<std::string> requests_;
  std::atomic<bool> include_count_{true};
  MockServer server_;
};

// v2 note for a submission with the given reviews (rating, text).
json openreview_note(const std::string& id, const std::string& title, const std::string& abstract,
                     const std::vector<std::tuple<std::string, int, std::string>>& reviews,
                     const std::string& invitation_prefix = "ICLR.cc/2024/Conference/Submission1");

// Deterministic stand-in for the chat, embedding, classifier and scoring backends.
//
// Annotation: reviews mentioning "vague" are DR/SUPERFICIALITY, "rude"
// DR/OVERLY_HARSH_MALICIOUS, everything else SR. Generation: 60 pseudo-random
// words seeded by the prompt; prompts containing `gap_marker` get a one-word reply.
class MockLlm {
 public:
  MockLlm();
  std::string base_url() const { return server_.base_url(); }
  void malformed_replies(int n) { malformed_ = n; }
  void gap_marker(std::string marker);
  int chat_calls() const { return chat_calls_; }
  // Backend config JSON pointing at this server.
  json backend_config(const std::string& model_id = "mock-model") const;

 private:
  std::string chat_reply(const json& messages);
  MockServer server_;
  std::atomic<int> malformed_{0};
  std::atomic<int> chat_calls_{0};
  mutable std::mutex mu_;
  std::string gap_marker_;
};

// In-process transport answering from a queue; records every request.
class ScriptedTransport final : public reviewguard::llmio::Transport {
 public:
  using Handler = std::function<reviewguard::llmio::HttpResponse(const reviewguard::llmio::HttpRequest&)>;
  explicit ScriptedTransport(Handler fallback = {});
  void push(reviewguard::llmio::HttpResponse response);
  reviewguard::llmio::HttpResponse send(const reviewguard::llmio::HttpRequest& request,
                                        reviewguard::llmio::Millis timeout) override;
  std::vector<reviewguard::llmio::HttpRequest> requests() const;
  std::size_t count() const;

 private:
  mutable std::mutex mu_;
  std::deque<reviewguard::llmio::HttpResponse> queue_;
  std::vector<reviewguard::llmio::HttpRequest> requests_;
  Handler fallback_;
};

reviewguard::llmio::HttpResponse ok_json(const json& body);

// Random words from a small fixed vocabulary.
std::string random_words(std::mt19937_64& rng, std::size_t n);

struct CorpusShape {
  std::size_t papers = 10;
  std::size_t min_reviews = 2;
  std::size_t max_reviews = 6;
  std::string venue = "ICLR";
  std::int64_t year = 2024;
};

// Papers with random 1-10 ratings and texts; review texts carry "vague" or
// "rude" now and then so MockLlm labels a mix of SR and DR.
std::vector<reviewguard::corpus::PaperBundle> random_bundles(std::mt19937_64& rng, const CorpusShape& shape);

void fill_store(const fs::path& root, const std::vector<reviewguard::corpus::PaperBundle>& bundles);

// Uniform dataset inputs: every paper has `reviews_per_paper` real reviews
// (the first one DR on even-numbered papers) and all seven synthetic records.
reviewguard::datasets::BuildInputs dataset_inputs(std::mt19937_64& rng, std::size_t papers,
                                                  std::size_t reviews_per_paper = 3);

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

// Runs the command-line front end in-process.
CliRun run_cli(const std::vector<std::string>& args);

// Temporary project directory wired to a mock note listing and mock model
// backends: config.json, sources.json and backend.json are written on
// construction and every run passes --config.
class Workspace {
 public:
  explicit Workspace(std::size_t papers = 40, std::uint64_t seed = 1);
  CliRun run(std::vector<std::string> args) const;
  fs::path operator/(const std::string& name) const { return dir_ / name; }
  const fs::path& path() const { return dir_.path(); }
  MockLlm& llm() { return llm_; }
  MockOpenReview& openreview() { return openreview_; }
  const std::vector<reviewguard::corpus::PaperBundle>& bundles() const { return bundles_; }

 private:
  TempDir dir_;
  MockOpenReview openreview_;
  MockLlm llm_;
  std::vector<reviewguard::corpus::PaperBundle> bundles_;
};

// Path of the built reviewguard executable (set by CMake).
std::string reviewguard_binary();

}  // namespace rgtest
