#include <algorithm>
#include <set>
#include <variant>

#include <fmt/format.h>

#include "reviewguard/corpus/ingest.hpp"
#include "reviewguard/util/jsonl.hpp"
#include "reviewguard/util/parallel.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string percent_encode(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

// v2 notes wrap every content field as {"value": ...}; v1 notes do not.
const ordered_json& field_value(const ordered_json& v) {
  if (v.is_object() && v.contains("value")) return v.at("value");
  return v;
}

std::string stringify(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_string(); })) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ", ";
      out += e.get<std::string>();
    }
    return out;
  }
  return v.dump();
}

std::optional<std::int64_t> first_score(const ordered_json& content, const std::vector<std::string>& fields) {
  for (const auto& f : fields) {
    if (content.contains(f)) return parse_rating(stringify(field_value(content.at(f))));
  }
  return std::nullopt;
}

bool is_review_reply(const ordered_json& reply, const std::string& suffix) {
  auto matches = [&](const ordered_json& inv) {
    if (!inv.is_string()) return false;
    const auto s = inv.get<std::string>();
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (reply.contains("invitations") && reply.at("invitations").is_array()) {
    for (const auto& inv : reply.at("invitations")) {
      if (matches(inv)) return true;
    }
  }
  return reply.contains("invitation") && matches(reply.at("invitation"));
}

json to_plain(const ordered_json& j) { return json::parse(j.dump()); }

}  // namespace

ParsedSubmission parse_submission(const ordered_json& note, const VenueSource& source,
                                  const std::optional<std::string>& data_cutoff) {
  ParsedSubmission out;
  if (!note.is_object() || !note.contains("id") || !note.at("id").is_string() || !note.contains("content") ||
      !note.at("content").is_object()) {
    out.skipped.push_back({"submission lacks id or content", to_plain(note)});
    return out;
  }
  PaperRecord paper;
  paper.paper_id = note.at("id").get<std::string>();
  paper.venue = source.venue;
  paper.year = source.year;
  const auto& content = note.at("content");
  if (content.contains("title")) paper.title = stringify(field_value(content.at("title")));
  if (content.contains("abstract")) paper.abstract = stringify(field_value(content.at("abstract")));

  const ordered_json* replies = nullptr;
  if (note.contains("details") && note.at("details").is_object()) {
    const auto& d = note.at("details");
    if (d.contains("replies")) {
      replies = &d.at("replies");
    } else if (d.contains("directReplies")) {
      replies = &d.at("directReplies");
    }
  }
  if (replies != nullptr && replies->is_array()) {
    for (const auto& reply : *replies) {
      if (!reply.is_object() || !reply.contains("id") || !reply.at("id").is_string() ||
          !reply.contains("content") || !reply.at("content").is_object()) {
        out.skipped.push_back({"reply lacks id or content", to_plain(reply)});
        continue;
      }
      if (!is_review_reply(reply, source.review_invitation_suffix)) continue;

      ReviewRecord review;
      review.review_id = reply.at("id").get<std::string>();
      review.paper_id = paper.paper_id;
      for (const char* key : {"cdate", "tcdate"}) {
        if (reply.contains(key) && reply.at(key).is_number()) {
          review.created_at = iso8601_from_millis(reply.at(key).get<std::int64_t>());
          break;
        }
      }
      if (data_cutoff && review.created_at &&
          review.created_at->substr(0, data_cutoff->size()) > *data_cutoff) {
        ++out.after_cutoff;
        continue;
      }
      const auto& rc = reply.at("content");
      review.rating = first_score(rc, source.rating_fields);
      review.confidence = first_score(rc, source.confidence_fields);
      for (const auto& [key, value] : rc.items()) {
        const auto text = stringify(field_value(value));
        review.raw_fields[key] = text;
        const bool is_text = std::find(source.text_fields.begin(), source.text_fields.end(), key) !=
                             source.text_fields.end();
        if (is_text && !trim(text).empty()) {
          if (!review.text.empty()) review.text += "\n\n";
          review.text += text;
        }
      }
      if (review.text.empty()) {
        out.skipped.push_back({"review has no text fields", to_plain(reply)});
        continue;
      }
      out.reviews.push_back(std::move(review));
    }
  }
  std::sort(out.reviews.begin(), out.reviews.end(),
            [](const ReviewRecord& a, const ReviewRecord& b) { return a.review_id < b.review_id; });
  out.reviews.erase(std::unique(out.reviews.begin(), out.reviews.end(),
                                [](const auto& a, const auto& b) { return a.review_id == b.review_id; }),
                    out.reviews.end());
  if (!out.reviews.empty()) {
    for (const auto& r : out.reviews) paper.review_ids.push_back(r.review_id);
    out.paper = std::move(paper);
  }
  return out;
}

// ---- SourceConfig ------------------------------------------------------------

SourceConfig SourceConfig::defaults() {
  SourceConfig c;
  auto add = [&](const std::string& venue, const std::string& prefix, std::int64_t year) {
    VenueSource v;
    v.venue = venue;
    v.year = year;
    const auto base = fmt::format("{}/{}/Conference", prefix, year);
    v.venueids = {base, base + "/Rejected_Submission", base + "/Withdrawn_Submission"};
    c.venues.push_back(std::move(v));
  };
  for (std::int64_t y = 2018; y <= 2025; ++y) add("ICLR", "ICLR.cc", y);
  for (std::int64_t y = 2021; y <= 2024; ++y) add("NeurIPS", "NeurIPS.cc", y);
  return c;
}

SourceConfig SourceConfig::from_json(const json& j) {
  SourceConfig c = j.value("use_defaults", false) ? defaults() : SourceConfig{};
  c.base_url = j.value("base_url", c.base_url);
  c.token_env = j.value("token_env", c.token_env);
  c.page_size = j.value("page_size", c.page_size);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
  c.timeout = llmio::Millis{j.value("timeout_ms", static_cast<std::int64_t>(c.timeout.count()))};
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.backoff_base =
        llmio::Millis{r.value("backoff_base_ms", static_cast<std::int64_t>(c.retry.backoff_base.count()))};
    c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
  }
  if (j.contains("data_cutoff") && !j.at("data_cutoff").is_null()) {
    c.data_cutoff = j.at("data_cutoff").get<std::string>();
  }
  for (const auto& v : j.value("venues", json::array())) {
    VenueSource s;
    s.venue = v.at("venue").get<std::string>();
    s.year = v.at("year").get<std::int64_t>();
    s.venueids = v.at("venueids").get<std::vector<std::string>>();
    s.review_invitation_suffix = v.value("review_invitation_suffix", s.review_invitation_suffix);
    s.rating_fields = v.value("rating_fields", s.rating_fields);
    s.confidence_fields = v.value("confidence_fields", s.confidence_fields);
    s.text_fields = v.value("text_fields", s.text_fields);
    if (v.contains("scale")) {
      s.scale.min = v.at("scale").at("min").get<std::int64_t>();
      s.scale.max = v.at("scale").at("max").get<std::int64_t>();
    }
    auto same = std::find_if(c.venues.begin(), c.venues.end(),
                             [&](const VenueSource& e) { return e.venue == s.venue && e.year == s.year; });
    if (same != c.venues.end()) {
      *same = std::move(s);
    } else {
      c.venues.push_back(std::move(s));
    }
  }
  if (c.page_size <= 0) throw ValidationError("source config: page_size must be > 0");
  return c;
}

SourceConfig SourceConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(jsonl::read_text(path)));
  } catch (const json::exception& e) {
    throw ValidationError("source config " + path.string() + ": " + e.what());
  }
}

const VenueSource& SourceConfig::lookup(const std::string& venue, std::int64_t year) const {
  for (const auto& v : venues) {
    if (v.venue == venue && v.year == year) return v;
  }
  throw ValidationError(fmt::format("unsupported venue/year {} {} (not in source mapping)", venue, year));
}

ScaleTable SourceConfig::scales() const {
  ScaleTable t;
  for (const auto& v : venues) t.set(v.venue, v.year, v.scale);
  return t;
}

// ---- fetch -----------------------------------------------------------------

IngestResult fetch_venue(Store& store, const std::string& venue, std::int64_t year, const SourceConfig& config,
                         FetchOptions options) {
  const auto& source = config.lookup(venue, year);
  auto env = options.env ? options.env : llmio::process_env();
  llmio::CallerOptions co;
  co.model_id = "openreview";
  co.auth_env = env(config.token_env) ? config.token_env : std::string{};
  co.max_in_flight = config.max_in_flight;
  co.requests_per_minute = config.requests_per_minute;
  co.timeout = config.timeout;
  co.retry = config.retry;
  auto transport = options.transport ? options.transport : llmio::make_http_transport(config.base_url);
  llmio::HttpCaller caller(co, transport, options.clock, options.log, env);

  IngestResult result;
  std::set<std::string> papers_seen;
  std::set<std::string> reviews_seen;

  auto process = [&](const ordered_json& page) {
    for (const auto& note : page.at("notes")) {
      auto parsed = parse_submission(note, source, config.data_cutoff);
      result.after_cutoff += parsed.after_cutoff;
      for (auto& s : parsed.skipped) result.skipped.push_back(std::move(s));
      if (!parsed.paper) continue;
      store.upsert(*parsed.paper);
      papers_seen.insert(parsed.paper->paper_id);
      for (const auto& r : parsed.reviews) {
        store.upsert(r);
        reviews_seen.insert(r.review_id);
        if (r.rating && !source.scale.contains(*r.rating)) result.out_of_scale.push_back(r.review_id);
      }
    }
  };

  for (const auto& venueid : source.venueids) {
    const auto key = fmt::format("{}/{}/{}", venue, year, venueid);
    std::int64_t next = store.cursor(key).value_or(0);

    using PageOrError = std::variant<ordered_json, std::string>;
    auto fetch_page = [&](std::int64_t offset) -> PageOrError {
      llmio::HttpRequest req;
      req.method = "GET";
      req.path = fmt::format("/notes?content.venueid={}&details=replies&offset={}&limit={}",
                             percent_encode(venueid), offset, config.page_size);
      try {
        auto res = caller.call(req);
        auto page = ordered_json::parse(res.response.body);
        if (!page.is_object() || !page.contains("notes") || !page.at("notes").is_array()) {
          return std::string("listing response lacks a notes array");
        }
        return page;
      } catch (const llmio::BackendError& e) {
        return std::string(e.what());
      } catch (const ordered_json::exception& e) {
        return std::string("listing response is not JSON: ") + e.what();
      }
    };
    auto abort = [&](const std::string& why) {
      throw IngestAborted(fmt::format("ingest of {} stopped at offset {}: {}", key, next, why),
                          fmt::format("{}@{}", key, next));
    };

    auto first = fetch_page(next);
    if (auto* err = std::get_if<std::string>(&first)) abort(*err);
    const auto& first_page = std::get<ordered_json>(first);
    process(first_page);
    const auto first_size = static_cast<std::int64_t>(first_page.at("notes").size());
    next += config.page_size;
    store.record_cursor(key, next);

    std::optional<std::int64_t> total;
    if (first_page.contains("count") && first_page.at("count").is_number_integer()) {
      total = first_page.at("count").get<std::int64_t>();
    }
    if (total) {
      std::vector<std::int64_t> offsets;
      for (std::int64_t o = next; o < *total; o += config.page_size) offsets.push_back(o);
      const auto window = static_cast<std::size_t>(std::max(1, config.max_in_flight));
      for (std::size_t start = 0; start < offsets.size(); start += window) {
        std::vector<std::int64_t> batch(offsets.begin() + static_cast<std::ptrdiff_t>(start),
                                        offsets.begin() + static_cast<std::ptrdiff_t>(std::min(offsets.size(), start + window)));
        auto pages = parallel_map(batch, window, fetch_page);
        for (auto& p : pages) {
          if (auto* err = std::get_if<std::string>(&p)) abort(*err);
          process(std::get<ordered_json>(p));
          next += config.page_size;
          store.record_cursor(key, next);
        }
      }
    } else if (first_size >= config.page_size) {
      for (;;) {
        auto p = fetch_page(next);
        if (auto* err = std::get_if<std::string>(&p)) abort(*err);
        const auto& page = std::get<ordered_json>(p);
        process(page);
        const auto size = static_cast<std::int64_t>(page.at("notes").size());
        next += config.page_size;
        store.record_cursor(key, next);
        if (size < config.page_size) break;
      }
    }
  }
  store.commit();
  result.papers = papers_seen.size();
  result.reviews = reviews_seen.size();
  return result;
}

}  // namespace reviewguard::corpus
