#include <fmt/format.h>

#include "reviewguard/annotate/prompt.hpp"
#include "reviewguard/error.hpp"
#include "reviewguard/taxonomy.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::annotate {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kOpen = "<<<REVIEWS\n";
constexpr std::string_view kClose = "\nREVIEWS>>>";

// '<' and '>' never occur raw inside the payload, so the markers cannot be forged.
std::string escape_markers(const std::string& dumped) {
  std::string out;
  out.reserve(dumped.size());
  for (char c : dumped) {
    if (c == '<') {
      out += "\\u003c";
    } else if (c == '>') {
      out += "\\u003e";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string reviews_payload(const std::vector<corpus::ReviewRecord>& reviews, std::size_t count) {
  std::string out = "[";
  for (std::size_t i = 0; i < count; ++i) {
    const auto& r = reviews[i];
    ordered_json j;
    j["review_id"] = r.review_id;
    j["rating"] = r.rating ? ordered_json(*r.rating) : ordered_json(nullptr);
    j["confidence"] = r.confidence ? ordered_json(*r.confidence) : ordered_json(nullptr);
    j["text"] = r.text;
    out += i == 0 ? "\n" : ",\n";
    out += escape_markers(j.dump(-1, ' ', false, ordered_json::error_handler_t::replace));
  }
  out += "\n]";
  return out;
}

std::string subtype_list() {
  std::string out;
  for (auto c : kSubtypes) {
    if (!out.empty()) out += ", ";
    out += fmt::format("\"{}\"", canonical_name(c));
  }
  return out;
}

std::size_t clip_utf8(const std::string& s, std::size_t n) {
  if (n >= s.size()) return s.size();
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  return n;
}

}  // namespace

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string render_category_definitions() {
  std::string out;
  for (auto c : kAllCategories) {
    if (!out.empty()) out += "\n\n";
    out += fmt::format("### {} ({})\n{}", canonical_name(c), display_name(c), definition(c));
  }
  out += "\n\nDeficient review (DR): " + deficient_definition();
  return out;
}

AnnotationPrompt build_annotation_prompt(const corpus::PaperRecord& paper,
                                         const std::vector<corpus::ReviewRecord>& reviews,
                                         const PromptOptions& options, const PromptTemplate& tmpl) {
  if (trim(paper.abstract).empty()) throw ValidationError("paper " + paper.paper_id + " has an empty abstract");
  if (reviews.empty()) throw ValidationError("paper " + paper.paper_id + " has no reviews to annotate");

  std::map<std::string, std::string> values{{"category_definitions", render_category_definitions()},
                                            {"title", paper.title},
                                            {"abstract", paper.abstract},
                                            {"subtype_ids", subtype_list()}};
  auto build = [&](const std::vector<corpus::ReviewRecord>& rs, std::size_t count, std::size_t dropped,
                   bool clipped) {
    values["reviews"] = reviews_payload(rs, count);
    std::string note;
    if (dropped > 0 || clipped) {
      note = fmt::format("[TRUNCATED: {} of {} reviews omitted{} to fit the length budget]\n", dropped,
                         reviews.size(), clipped ? ", last review text shortened" : "");
    }
    values["truncation_note"] = note;
    auto rendered = tmpl.render(values);
    AnnotationPrompt p;
    p.system = std::move(rendered.system);
    p.user = std::move(rendered.user);
    p.template_hash = tmpl.hash();
    for (std::size_t i = 0; i < rs.size(); ++i) {
      (i < count ? p.included_ids : p.dropped_ids).push_back(rs[i].review_id);
    }
    p.text_clipped = clipped;
    return p;
  };

  for (std::size_t count = reviews.size(); count >= 1; --count) {
    auto p = build(reviews, count, reviews.size() - count, false);
    if (p.estimated_tokens() <= options.token_budget) return p;
  }

  // Even a single review is too long: shorten its text until the prompt fits.
  std::vector<corpus::ReviewRecord> rs = reviews;
  auto& text = rs.front().text;
  for (;;) {
    auto p = build(rs, 1, reviews.size() - 1, true);
    const auto tokens = p.estimated_tokens();
    if (tokens <= options.token_budget) return p;
    if (text.empty()) throw ValidationError("annotation template alone exceeds the token budget");
    const auto over_bytes = (tokens - options.token_budget) * 4 + 16;
    text.resize(clip_utf8(text, text.size() > over_bytes ? text.size() - over_bytes : 0));
  }
}

nlohmann::json extract_prompt_reviews(const std::string& prompt_text) {
  const auto open = prompt_text.find(kOpen);
  if (open == std::string::npos) throw ValidationError("prompt has no review block");
  const auto start = open + kOpen.size();
  const auto close = prompt_text.find(kClose, start);
  if (close == std::string::npos) throw ValidationError("prompt review block is not closed");
  return nlohmann::json::parse(prompt_text.substr(start, close - start));
}

}  // namespace reviewguard::annotate
