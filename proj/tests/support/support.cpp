#include "support.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "reviewguard/cli/app.hpp"

#include "reviewguard/taxonomy.hpp"

namespace rgtest {

using reviewguard::llmio::HttpRequest;
using reviewguard::llmio::HttpResponse;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("reviewguard-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

MockServer::~MockServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

void MockServer::start() {
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ < 0) throw std::runtime_error("mock server could not bind");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

// ---- OpenReview ----------------------------------------------------------------

MockOpenReview::MockOpenReview() {
  server_.http().Get("/notes", [this](const httplib::Request& req, httplib::Response& res) {
    const auto venueid = req.get_param_value("content.venueid");
    const auto offset = std::stoll(req.get_param_value("offset"));
    const auto limit = std::stoll(req.get_param_value("limit"));
    std::lock_guard lk(mu_);
    requests_.push_back(venueid + "@" + std::to_string(offset));
    auto f = failures_.find(offset);
    if (f != failures_.end() && f->second.second > 0) {
      --f->second.second;
      res.status = f->second.first;
      res.set_content(R"({"error":"injected"})", "application/json");
      return;
    }
    const auto& all = notes_[venueid];
    json page{{"notes", json::array()}};
    for (auto i = offset; i < std::min<std::int64_t>(offset + limit, static_cast<std::int64_t>(all.size())); ++i) {
      page["notes"].push_back(all[static_cast<std::size_t>(i)]);
    }
    if (include_count_) page["count"] = all.size();
    res.set_content(page.dump(), "application/json");
  });
  server_.start();
}

void MockOpenReview::add(const std::string& venueid, json note) {
  std::lock_guard lk(mu_);
  notes_[venueid].push_back(std::move(note));
}

void MockOpenReview::fail_at(std::int64_t offset, int status, int times) {
  std::lock_guard lk(mu_);
  failures_[offset] = {status, times};
}

std::vector<std::string> MockOpenReview::requests() const {
  std::lock_guard lk(mu_);
  return requests_;
}

json openreview_note(const std::string& id, const std::string& title, const std::string& abstract,
                     const std::vector<std::tuple<std::string, int, std::string>>& reviews,
                     const std::string& invitation_prefix) {
  json replies = json::array();
  std::int64_t t = 1700000000000;
  for (const auto& [rid, rating, text] : reviews) {
    replies.push_back(json{{"id", rid},
                           {"invitations", {invitation_prefix + "/-/Official_Review"}},
                           {"cdate", t},
                           {"content",
                            {{"rating", {{"value", std::to_string(rating) + ": rating"}}},
                             {"confidence", {{"value", "3: fairly confident"}}},
                             {"review", {{"value", text}}}}}});
    t += 60000;
  }
  replies.push_back(json{{"id", id + "_comment"},
                         {"invitations", {invitation_prefix + "/-/Official_Comment"}},
                         {"content", {{"comment", {{"value", "thanks"}}}}}});
  return json{{"id", id},
              {"content", {{"title", {{"value", title}}}, {"abstract", {{"value", abstract}}}}},
              {"details", {{"replies", replies}}}};
}

// ---- model backends ------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words{
      "the",      "model",     "results",   "paper",     "method",    "authors",  "experiments", "baseline",
      "clearly",  "however",   "section",   "table",     "figure",    "proposed", "approach",    "novel",
      "training", "dataset",   "evaluation", "ablation", "convincing", "unclear", "significant", "improvement",
      "theory",   "proof",     "assumption", "limited",  "strong",    "weak",     "writing",     "clarity",
      "related",  "work",      "compare",   "benchmark", "variance",  "seeds",    "metric",      "analysis",
      "missing",  "details",   "reproduce", "code",      "appendix",  "lemma",    "bound",       "empirical",
      "scaling",  "transformer", "graph",   "kernel",    "loss",      "optimizer", "regularization", "noise",
      "robust",   "setting",   "question",  "suggest"};
  return words;
}

}  // namespace

MockLlm::MockLlm() {
  auto& http = server_.http();
  http.Post("/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    ++chat_calls_;
    auto body = json::parse(req.body);
    const auto text = chat_reply(body.at("messages"));
    json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
               {"usage", {{"prompt_tokens", req.body.size() / 4}, {"completion_tokens", text.size() / 4}}}};
    res.set_content(reply.dump(), "application/json");
  });
  http.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body);
    json vectors = json::array();
    for (const auto& t : body.at("texts")) {
      std::vector<double> v(16, 0.0);
      for (const auto& w : split_words(t.get<std::string>())) v[fnv1a(w) % 16] += 1.0;
      vectors.push_back(v);
    }
    res.set_content(json{{"embeddings", vectors}}.dump(), "application/json");
  });
  http.Post("/classify", [](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body);
    json scores = json::array();
    for (const auto& t : body.at("texts")) {
      const auto s = t.get<std::string>();
      if (s.find("rude") != std::string::npos) {
        scores.push_back({0.7, 0.2, 0.1});
      } else if (s.find("vague") != std::string::npos) {
        scores.push_back({0.2, 0.6, 0.2});
      } else {
        scores.push_back({0.1, 0.3, 0.6});
      }
    }
    res.set_content(json{{"labels", {"negative", "neutral", "positive"}}, {"scores", scores}}.dump(),
                    "application/json");
  });
  http.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body);
    json tokens = json::array();
    for (const auto& w : split_words(body.at("text").get<std::string>())) {
      const auto h = fnv1a(w);
      tokens.push_back({{"lp_observer", -(1.0 + static_cast<double>(h % 5) / 2.0)},
                        {"ce_cross", 2.0 + static_cast<double>(h % 3) / 10.0}});
    }
    res.set_content(json{{"tokens", tokens}, {"n_tokens", tokens.size()}}.dump(), "application/json");
  });
  server_.start();
}

void MockLlm::gap_marker(std::string marker) {
  std::lock_guard lk(mu_);
  gap_marker_ = std::move(marker);
}

json MockLlm::backend_config(const std::string& model_id) const {
  return json{{"base_url", base_url()},
              {"model_id", model_id},
              {"max_in_flight", 4},
              {"requests_per_minute", 100000},
              {"timeout_ms", 10000},
              {"batch_size", 8},
              {"retry", {{"max_attempts", 2}, {"backoff_base_ms", 1}, {"multiplier", 1.0}}}};
}

std::string MockLlm::chat_reply(const json& messages) {
  std::string prompt;
  for (const auto& m : messages) {
    if (m.at("role") == "user") {
      prompt = m.at("content").get<std::string>();
      break;
    }
  }
  const auto open = prompt.find("<<<REVIEWS\n");
  if (open != std::string::npos) {
    if (malformed_.load() > 0) {
      --malformed_;
      return "Sorry, here are my thoughts in prose rather than JSON.";
    }
    const auto start = open + 11;
    const auto close = prompt.find("\nREVIEWS>>>", start);
    auto reviews = json::parse(prompt.substr(start, close - start));
    json out = json::array();
    for (const auto& r : reviews) {
      const auto text = r.at("text").get<std::string>();
      json item{{"review_id", r.at("review_id")}, {"verdict", "SR"}, {"subtypes", json::array()},
                {"rationale", "Specific and engaged."}};
      if (text.find("vague") != std::string::npos) {
        item["verdict"] = "DR";
        item["subtypes"].push_back("SUPERFICIALITY");
        item["rationale"] = "Generic statements only.";
      }
      if (text.find("rude") != std::string::npos) {
        item["verdict"] = "DR";
        item["subtypes"].push_back("OVERLY_HARSH_MALICIOUS");
        item["rationale"] = "Hostile tone.";
      }
      out.push_back(item);
    }
    return "Here is my assessment.\n```json\n" + out.dump(2) + "\n```";
  }
  {
    std::lock_guard lk(mu_);
    if (!gap_marker_.empty() && prompt.find(gap_marker_) != std::string::npos) return "Fine.";
  }
  std::mt19937_64 rng(fnv1a(prompt));
  return random_words(rng, 60) + ".";
}

// ---- scripted transport --------------------------------------------------------

ScriptedTransport::ScriptedTransport(Handler fallback) : fallback_(std::move(fallback)) {}

void ScriptedTransport::push(HttpResponse response) {
  std::lock_guard lk(mu_);
  queue_.push_back(std::move(response));
}

HttpResponse ScriptedTransport::send(const HttpRequest& request, reviewguard::llmio::Millis) {
  std::lock_guard lk(mu_);
  requests_.push_back(request);
  if (!queue_.empty()) {
    auto r = std::move(queue_.front());
    queue_.pop_front();
    return r;
  }
  if (fallback_) return fallback_(request);
  return HttpResponse{0, "", "script exhausted", false};
}

std::vector<HttpRequest> ScriptedTransport::requests() const {
  std::lock_guard lk(mu_);
  return requests_;
}

std::size_t ScriptedTransport::count() const {
  std::lock_guard lk(mu_);
  return requests_.size();
}

HttpResponse ok_json(const json& body) { return HttpResponse{200, body.dump(), "", false}; }

// ---- fixtures ------------------------------------------------------------------

std::string random_words(std::mt19937_64& rng, std::size_t n) {
  const auto& v = vocabulary();
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += (i % 12 == 0) ? ". " : " ";
    out += v[rng() % v.size()];
  }
  return out;
}

std::vector<reviewguard::corpus::PaperBundle> random_bundles(std::mt19937_64& rng, const CorpusShape& shape) {
  std::vector<reviewguard::corpus::PaperBundle> out;
  for (std::size_t p = 0; p < shape.papers; ++p) {
    reviewguard::corpus::PaperBundle b;
    char id[32];
    std::snprintf(id, sizeof id, "%s%lld_p%04zu", shape.venue.c_str(), static_cast<long long>(shape.year), p);
    b.paper.paper_id = id;
    b.paper.venue = shape.venue;
    b.paper.year = shape.year;
    b.paper.title = "Paper " + std::to_string(p);
    b.paper.abstract = "We study " + random_words(rng, 50) + ".";
    const auto n = shape.min_reviews + rng() % (shape.max_reviews - shape.min_reviews + 1);
    for (std::size_t r = 0; r < n; ++r) {
      reviewguard::corpus::ReviewRecord rev;
      rev.review_id = std::string(id) + "_r" + std::to_string(r);
      rev.paper_id = id;
      rev.text = random_words(rng, 30 + rng() % 80) + ".";
      const auto roll = rng() % 6;
      if (roll == 0) rev.text += " Overall this is vague.";
      if (roll == 1) rev.text += " Frankly the authors are rude to readers.";
      rev.rating = static_cast<std::int64_t>(1 + rng() % 10);
      rev.confidence = static_cast<std::int64_t>(1 + rng() % 5);
      b.paper.review_ids.push_back(rev.review_id);
      b.reviews.push_back(std::move(rev));
    }
    std::sort(b.paper.review_ids.begin(), b.paper.review_ids.end());
    std::sort(b.reviews.begin(), b.reviews.end(), [](const auto& x, const auto& y) { return x.review_id < y.review_id; });
    out.push_back(std::move(b));
  }
  return out;
}

void fill_store(const fs::path& root, const std::vector<reviewguard::corpus::PaperBundle>& bundles) {
  fs::create_directories(root);
  auto store = reviewguard::corpus::Store::open(root);
  for (const auto& b : bundles) {
    store.upsert(b.paper);
    for (const auto& r : b.reviews) store.upsert(r);
  }
  store.commit();
}

std::string reviewguard_binary() { return REVIEWGUARD_BINARY; }

reviewguard::datasets::BuildInputs dataset_inputs(std::mt19937_64& rng, std::size_t papers,
                                                  std::size_t reviews_per_paper) {
  using namespace reviewguard;
  datasets::BuildInputs in;
  for (std::size_t p = 0; p < papers; ++p) {
    const auto paper_id = fmt::format("P{:03d}", p);
    for (std::size_t r = 0; r < reviews_per_paper; ++r) {
      corpus::ReviewRecord rv;
      rv.review_id = fmt::format("{}_r{}", paper_id, r);
      rv.paper_id = paper_id;
      rv.text = random_words(rng, 20 + rng() % 20) + " " + rv.review_id;
      in.reviews.push_back(rv);
      annotate::AnnotationRecord a;
      a.review_id = rv.review_id;
      a.annotator_id = "mock";
      if (r == 0 && p % 2 == 0) {
        a.verdict = Verdict::DR;
        a.subtypes = {kSubtypes[p % kSubtypes.size()]};
      }
      in.annotations.push_back(a);
    }
    for (auto c : kAllCategories) {
      augment::SyntheticReview s;
      s.paper_id = paper_id;
      s.target_category = c;
      s.synthetic_id = fmt::format("{}:{}", paper_id, canonical_name(c));
      s.text = random_words(rng, 45) + " " + s.synthetic_id;
      in.synthetics.push_back(s);
    }
  }
  return in;
}

CliRun run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"reviewguard"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::ostringstream out;
  std::ostringstream err;
  CliRun r;
  r.code = reviewguard::cli::dispatch(static_cast<int>(storage.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace

Workspace::Workspace(std::size_t papers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  bundles_ = random_bundles(rng, {.papers = papers});
  for (const auto& b : bundles_) {
    std::vector<std::tuple<std::string, int, std::string>> reviews;
    for (const auto& r : b.reviews) reviews.emplace_back(r.review_id, static_cast<int>(*r.rating), r.text);
    openreview_.add("ICLR.cc/2024/Conference", openreview_note(b.paper.paper_id, b.paper.title, b.paper.abstract, reviews));
  }
  write_json(dir_ / "sources.json",
             json{{"base_url", openreview_.base_url()},
                  {"page_size", 7},
                  {"requests_per_minute", 100000},
                  {"retry", {{"max_attempts", 2}, {"backoff_base_ms", 1}}},
                  {"venues", {{{"venue", "ICLR"}, {"year", 2024}, {"venueids", {"ICLR.cc/2024/Conference"}}}}}});
  write_json(dir_ / "backend.json", llm_.backend_config("mock-model"));
  const auto backend = (dir_ / "backend.json").string();
  write_json(dir_ / "config.json",
             json{{"store", (dir_ / "store").string()},
                  {"annotations", (dir_ / "annotations.jsonl").string()},
                  {"sources", (dir_ / "sources.json").string()},
                  {"calls_log", (dir_ / "logs" / "calls.jsonl").string()},
                  {"backends",
                   {{"annotate", backend}, {"augment", backend}, {"sentiment", backend}, {"embed", backend},
                    {"logprob", backend}}}});
}

CliRun Workspace::run(std::vector<std::string> args) const {
  args.insert(args.begin(), {"--config", (dir_ / "config.json").string()});
  return run_cli(args);
}

}  // namespace rgtest
