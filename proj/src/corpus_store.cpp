#include <algorithm>
#include <cctype>
#include <charconv>
#include <tuple>

#include "reviewguard/corpus/store.hpp"
#include "reviewguard/error.hpp"
#include "reviewguard/util/jsonl.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

void to_json(json& j, const PaperRecord& p) {
  j = json{{"paper_id", p.paper_id}, {"venue", p.venue},       {"year", p.year},
           {"title", p.title},       {"abstract", p.abstract}, {"review_ids", p.review_ids}};
}

void from_json(const json& j, PaperRecord& p) {
  j.at("paper_id").get_to(p.paper_id);
  j.at("venue").get_to(p.venue);
  j.at("year").get_to(p.year);
  p.title = j.value("title", std::string{});
  p.abstract = j.value("abstract", std::string{});
  p.review_ids = j.value("review_ids", std::vector<std::string>{});
  if (p.paper_id.empty()) throw ValidationError("paper_id must be non-empty");
  if (p.venue.empty()) throw ValidationError("paper " + p.paper_id + " lacks a venue");
}

void to_json(json& j, const ReviewRecord& r) {
  j = json{{"review_id", r.review_id},
           {"paper_id", r.paper_id},
           {"text", r.text},
           {"rating", optional_json(r.rating)},
           {"confidence", optional_json(r.confidence)},
           {"created_at", optional_json(r.created_at)},
           {"raw_fields", r.raw_fields}};
}

void from_json(const json& j, ReviewRecord& r) {
  j.at("review_id").get_to(r.review_id);
  j.at("paper_id").get_to(r.paper_id);
  r.text = j.value("text", std::string{});
  r.rating = optional_from<std::int64_t>(j, "rating");
  r.confidence = optional_from<std::int64_t>(j, "confidence");
  r.created_at = optional_from<std::string>(j, "created_at");
  r.raw_fields = j.value("raw_fields", std::map<std::string, std::string>{});
  if (r.review_id.empty()) throw ValidationError("review_id must be non-empty");
}

std::optional<std::int64_t> parse_rating(std::string_view raw) {
  const auto colon = raw.find(':');
  if (colon != std::string_view::npos) {
    if (auto v = parse_int(raw.substr(0, colon))) return v;
  }
  return parse_int(raw);
}

void ScaleTable::set(const std::string& venue, std::int64_t year, RatingScale scale) {
  scales_[{venue, year}] = scale;
}

RatingScale ScaleTable::lookup(const std::string& venue, std::int64_t year) const {
  auto it = scales_.find({venue, year});
  return it == scales_.end() ? RatingScale{} : it->second;
}

// ---- Store -----------------------------------------------------------------

bool Filter::matches(const PaperRecord& paper) const {
  if (venue && paper.venue != *venue) return false;
  if (year && paper.year != *year) return false;
  if (paper_id && paper.paper_id != *paper_id) return false;
  return true;
}

Store Store::open(const fs::path& root) {
  Store store(root);
  if (fs::exists(store.papers_file())) {
    jsonl::read(store.papers_file(), [&](const json& j, std::size_t) { store.apply(j.get<PaperRecord>()); });
  }
  if (fs::exists(store.reviews_file())) {
    jsonl::read(store.reviews_file(), [&](const json& j, std::size_t) { store.apply(j.get<ReviewRecord>()); });
  }
  if (fs::exists(store.journal_file())) {
    jsonl::read(store.journal_file(), [&](const json& j, std::size_t) {
      const auto op = j.at("op").get<std::string>();
      if (op == "paper") {
        store.apply(j.at("record").get<PaperRecord>());
      } else if (op == "review") {
        store.apply(j.at("record").get<ReviewRecord>());
      } else if (op == "cursor") {
        store.cursors_[j.at("key").get<std::string>()] = j.at("offset").get<std::int64_t>();
      } else {
        throw ValidationError("unknown journal op " + op);
      }
      store.dirty_ = true;
    });
  }
  return store;
}

void Store::apply(const PaperRecord& paper) { papers_[paper.paper_id] = paper; }

void Store::apply(const ReviewRecord& review) {
  auto it = reviews_.find(review.review_id);
  if (it != reviews_.end()) by_paper_[it->second.paper_id].erase(review.review_id);
  by_paper_[review.paper_id].insert(review.review_id);
  reviews_[review.review_id] = review;
}

void Store::upsert(const PaperRecord& paper) {
  if (paper.paper_id.empty() || paper.venue.empty()) {
    throw ValidationError("paper records need paper_id and venue");
  }
  auto it = papers_.find(paper.paper_id);
  if (it != papers_.end() && it->second == paper) return;
  jsonl::append(journal_file(), json{{"op", "paper"}, {"record", paper}});
  apply(paper);
  dirty_ = true;
}

void Store::upsert(const ReviewRecord& review) {
  if (!papers_.contains(review.paper_id)) {
    throw ValidationError("review " + review.review_id + " references unknown paper " + review.paper_id);
  }
  auto it = reviews_.find(review.review_id);
  if (it != reviews_.end() && it->second == review) return;
  jsonl::append(journal_file(), json{{"op", "review"}, {"record", review}});
  apply(review);
  dirty_ = true;
}

void Store::record_cursor(const std::string& key, std::int64_t offset) {
  jsonl::append(journal_file(), json{{"op", "cursor"}, {"key", key}, {"offset", offset}});
  cursors_[key] = offset;
  dirty_ = true;
}

std::optional<std::int64_t> Store::cursor(const std::string& key) const {
  auto it = cursors_.find(key);
  if (it == cursors_.end()) return std::nullopt;
  return it->second;
}

void Store::commit() {
  if (!dirty_) return;
  std::vector<json> paper_lines;
  std::vector<json> review_lines;
  for (const auto* p : sorted_papers({})) {
    paper_lines.emplace_back(*p);
    for (const auto* r : reviews_of(*p)) review_lines.emplace_back(*r);
  }
  jsonl::write_atomic(papers_file(), paper_lines);
  jsonl::write_atomic(reviews_file(), review_lines);
  std::error_code ec;
  fs::remove(journal_file(), ec);
  cursors_.clear();
  dirty_ = false;
}

std::vector<const PaperRecord*> Store::sorted_papers(const Filter& filter) const {
  std::vector<const PaperRecord*> out;
  for (const auto& [id, p] : papers_) {
    if (filter.matches(p)) out.push_back(&p);
  }
  std::sort(out.begin(), out.end(), [](const PaperRecord* a, const PaperRecord* b) {
    return std::tie(a->venue, a->year, a->paper_id) < std::tie(b->venue, b->year, b->paper_id);
  });
  return out;
}

std::vector<const ReviewRecord*> Store::reviews_of(const PaperRecord& paper) const {
  std::vector<const ReviewRecord*> out;
  auto it = by_paper_.find(paper.paper_id);
  if (it == by_paper_.end()) return out;
  for (const auto& id : it->second) out.push_back(&reviews_.at(id));
  return out;
}

std::vector<Record> Store::load(const Filter& filter) const {
  std::vector<Record> out;
  for (const auto* p : sorted_papers(filter)) {
    if (!filter.review_id) out.emplace_back(*p);
    for (const auto* r : reviews_of(*p)) {
      if (filter.review_id && r->review_id != *filter.review_id) continue;
      out.emplace_back(*r);
    }
  }
  return out;
}

std::vector<PaperBundle> Store::papers(const Filter& filter) const {
  std::vector<PaperBundle> out;
  for (const auto* p : sorted_papers(filter)) {
    PaperBundle b{*p, {}};
    for (const auto* r : reviews_of(*p)) b.reviews.push_back(*r);
    out.push_back(std::move(b));
  }
  return out;
}

const PaperRecord* Store::find_paper(const std::string& paper_id) const {
  auto it = papers_.find(paper_id);
  return it == papers_.end() ? nullptr : &it->second;
}

const ReviewRecord* Store::find_review(const std::string& review_id) const {
  auto it = reviews_.find(review_id);
  return it == reviews_.end() ? nullptr : &it->second;
}

std::vector<std::string> Store::integrity_violations() const {
  std::vector<std::string> out;
  for (const auto& [id, r] : reviews_) {
    if (!papers_.contains(r.paper_id)) out.push_back("review " + id + " -> missing paper " + r.paper_id);
  }
  for (const auto& [id, p] : papers_) {
    if (p.review_ids.empty()) out.push_back("paper " + id + " has no reviews");
    for (const auto& rid : p.review_ids) {
      auto it = reviews_.find(rid);
      if (it == reviews_.end()) {
        out.push_back("paper " + id + " lists missing review " + rid);
      } else if (it->second.paper_id != id) {
        out.push_back("paper " + id + " lists review " + rid + " owned by " + it->second.paper_id);
      }
    }
  }
  return out;
}

}  // namespace reviewguard::corpus
