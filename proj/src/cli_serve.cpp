#include <fcntl.h>
#include <unistd.h>

#include <httplib.h>

#include <fmt/format.h>

#include "reviewguard/annotate/agreement.hpp"
#include "reviewguard/cli/serve.hpp"
#include "reviewguard/resources.hpp"
#include "reviewguard/taxonomy.hpp"

namespace reviewguard::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ApiReply error_reply(int status, const std::string& message) { return {status, json{{"error", message}}}; }

json machine_json(const annotate::AnnotationRecord& r) {
  json subs = json::array();
  for (auto c : r.subtypes) subs.push_back(canonical_name(c));
  return json{{"verdict", canonical_name(r.verdict)}, {"subtypes", subs}, {"rationale", r.rationale},
              {"annotator_id", r.annotator_id}};
}

std::string content_type(const std::string& path) {
  auto ends = [&](std::string_view ext) {
    return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
  };
  if (ends(".html")) return "text/html; charset=utf-8";
  if (ends(".js")) return "application/javascript";
  if (ends(".css")) return "text/css";
  if (ends(".json")) return "application/json";
  if (ends(".svg")) return "image/svg+xml";
  if (ends(".png")) return "image/png";
  return "application/octet-stream";
}

}  // namespace

ValidationService::ValidationService(annotate::AnnotationStore annotations, std::optional<corpus::Store> corpus,
                                     annotate::RoundRegistry rounds)
    : annotations_(std::move(annotations)), corpus_(std::move(corpus)), rounds_(std::move(rounds)) {}

ApiReply ValidationService::tasks(int round, const std::string& annotator) {
  std::lock_guard lk(mu_);
  const auto* r = rounds_.find(round);
  if (r == nullptr) return error_reply(404, fmt::format("unknown round {}", round));
  std::map<std::string, const annotate::AnnotationRecord*> machine;
  for (const auto& rec : annotations_.records()) {
    if (rec.round == 0) machine.emplace(rec.review_id, &rec);
  }
  json tasks = json::array();
  for (const auto& id : r->items) {
    json t{{"review_id", id}};
    if (corpus_) {
      if (const auto* review = corpus_->find_review(id)) {
        t["review"] = {{"text", review->text},
                       {"rating", review->rating ? json(*review->rating) : json(nullptr)},
                       {"confidence", review->confidence ? json(*review->confidence) : json(nullptr)}};
        if (const auto* paper = corpus_->find_paper(review->paper_id)) {
          t["paper"] = {{"paper_id", paper->paper_id}, {"title", paper->title}, {"abstract", paper->abstract}};
        }
      }
    }
    const auto* own = annotator.empty() ? nullptr : annotations_.find(id, annotator, round);
    t["label"] = own ? annotate::to_json(*own) : json(nullptr);
    if (r->closed) {
      auto m = machine.find(id);
      t["machine"] = m == machine.end() ? json(nullptr) : machine_json(*m->second);
    }
    tasks.push_back(std::move(t));
  }
  return {200, json{{"round", round}, {"blind", !r->closed}, {"annotator", annotator}, {"tasks", tasks}}};
}

ApiReply ValidationService::post_label(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("request body is not JSON: ") + e.what());
  }
  if (!j.is_object()) return error_reply(400, "request body must be a JSON object");
  for (const char* key : {"review_id", "annotator_id", "round", "verdict"}) {
    if (!j.contains(key)) return error_reply(400, fmt::format("missing field {}", key));
  }
  j["source"] = "human";
  annotate::AnnotationRecord rec;
  try {
    rec = annotate::annotation_from_json(j);
  } catch (const ValidationError& e) {
    return error_reply(422, e.what());
  }
  if (rec.annotator_id.empty()) return error_reply(422, "annotator_id must be non-empty");
  if (rec.round == 0) return error_reply(422, "round 0 is reserved for machine annotations");

  std::lock_guard lk(mu_);
  const auto* r = rounds_.find(rec.round);
  if (r == nullptr) return error_reply(404, fmt::format("unknown round {}", rec.round));
  if (r->closed) return error_reply(409, fmt::format("round {} is closed", rec.round));
  if (std::find(r->items.begin(), r->items.end(), rec.review_id) == r->items.end()) {
    return error_reply(404, fmt::format("review {} is not part of round {}", rec.review_id, rec.round));
  }
  if (rec.criteria_version.empty()) rec.criteria_version = r->criteria_version;
  try {
    annotations_.append(rec);
  } catch (const annotate::DuplicateAnnotation& e) {
    return error_reply(409, e.what());
  } catch (const ValidationError& e) {
    return error_reply(422, e.what());
  }
  return {201, annotate::to_json(rec)};
}

ApiReply ValidationService::agreement(int round, bool machine_reference) {
  std::lock_guard lk(mu_);
  const auto* r = rounds_.find(round);
  if (r == nullptr) return error_reply(404, fmt::format("unknown round {}", round));
  // Restrict to the round's sampled items so earlier machine labels do not leak in.
  const std::set<std::string> items(r->items.begin(), r->items.end());
  std::vector<annotate::AnnotationRecord> records;
  for (const auto& rec : annotations_.records()) {
    if (items.contains(rec.review_id) && (rec.round == round || rec.round == 0)) records.push_back(rec);
  }
  try {
    auto rep = annotate::agreement_report(records, round, machine_reference);
    auto body = annotate::to_json(rep);
    body["closed"] = r->closed;
    return {200, body};
  } catch (const ValidationError& e) {
    return error_reply(422, e.what());
  }
}

ApiReply ValidationService::list_rounds() {
  std::lock_guard lk(mu_);
  json out = json::array();
  for (const auto& r : rounds_.rounds()) {
    auto j = annotate::to_json(r);
    j["n_items"] = r.items.size();
    out.push_back(std::move(j));
  }
  return {200, json{{"rounds", out}}};
}

ApiReply ValidationService::open_round(const std::string& body) {
  json j = json::object();
  if (!body.empty()) {
    j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return error_reply(400, "request body must be a JSON object");
  }
  std::lock_guard lk(mu_);
  try {
    const auto& r = rounds_.open_round(annotations_.machine_labels(), j.value("size", std::size_t{100}),
                                       j.value("seed", std::uint64_t{0}),
                                       j.value("criteria_version", taxonomy_version()), j.value("note", std::string{}));
    return {201, annotate::to_json(r)};
  } catch (const ValidationError& e) {
    return error_reply(409, e.what());
  }
}

ApiReply ValidationService::close_round(int round) {
  std::lock_guard lk(mu_);
  try {
    return {200, annotate::to_json(rounds_.close_round(round))};
  } catch (const ValidationError& e) {
    return error_reply(404, e.what());
  }
}

// ---- HTTP binding -----------------------------------------------------------

Server::Server(const ServeOptions& options) : options_(options) {
  lock_path_ = options_.annotations;
  lock_path_ += ".lock";
  if (lock_path_.has_parent_path()) fs::create_directories(lock_path_.parent_path());
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    lock_path_.clear();
    throw Error("store locked: " + options_.annotations.string() + ".lock exists (another serve running?)");
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  try {
    auto rounds_path = options_.rounds ? *options_.rounds : fs::path(options_.annotations.string() + ".rounds.json");
    std::optional<corpus::Store> corpus;
    if (options_.store) corpus = corpus::Store::open(*options_.store);
    service_ = std::make_unique<ValidationService>(annotate::AnnotationStore::open(options_.annotations),
                                                   std::move(corpus), annotate::RoundRegistry::open(rounds_path));
  } catch (...) {
    std::error_code ec;
    fs::remove(lock_path_, ec);
    throw;
  }
  http_ = std::make_unique<httplib::Server>();
  auto& svc = *service_;
  auto send = [](httplib::Response& res, const ApiReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  auto int_param = [](const httplib::Request& req, const char* name) -> std::optional<int> {
    if (!req.has_param(name)) return std::nullopt;
    try {
      return std::stoi(req.get_param_value(name));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  http_->Get("/api/tasks", [&svc, send, int_param](const httplib::Request& req, httplib::Response& res) {
    auto round = int_param(req, "round");
    if (!round) return send(res, error_reply(400, "round query parameter required"));
    send(res, svc.tasks(*round, req.get_param_value("annotator")));
  });
  http_->Post("/api/labels", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.post_label(req.body));
  });
  http_->Get("/api/agreement", [&svc, send, int_param](const httplib::Request& req, httplib::Response& res) {
    auto round = int_param(req, "round");
    if (!round) return send(res, error_reply(400, "round query parameter required"));
    send(res, svc.agreement(*round, req.get_param_value("reference") != "none"));
  });
  http_->Get("/api/rounds", [&svc, send](const httplib::Request&, httplib::Response& res) { send(res, svc.list_rounds()); });
  http_->Post("/api/rounds", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.open_round(req.body));
  });
  http_->Post(R"(/api/rounds/(\d+)/close)", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.close_round(std::stoi(req.matches[1].str())));
  });
  http_->Get(R"(/(.*))", [](const httplib::Request& req, httplib::Response& res) {
    std::string path = req.matches[1].str();
    if (path.empty()) path = "index.html";
    auto asset = ui_assets::find(path);
    if (!asset) {
      res.status = 404;
      res.set_content("not found", "text/plain");
      return;
    }
    res.set_content(std::string(*asset), content_type(path));
  });
}

Server::~Server() {
  stop();
  if (!lock_path_.empty()) {
    std::error_code ec;
    fs::remove(lock_path_, ec);
  }
}

int Server::bind() {
  if (options_.port == 0) {
    const int port = http_->bind_to_any_port(options_.host);
    if (port < 0) throw Error("could not bind " + options_.host);
    return port;
  }
  if (!http_->bind_to_port(options_.host, options_.port)) {
    throw Error(fmt::format("port in use: {}:{}", options_.host, options_.port));
  }
  return options_.port;
}

void Server::run() { http_->listen_after_bind(); }

void Server::stop() {
  if (http_) http_->stop();
}

}  // namespace reviewguard::cli
