#include <algorithm>
#include <filesystem>

#include <fmt/format.h>

#include "reviewguard/annotate/record.hpp"
#include "reviewguard/util/jsonl.hpp"

namespace reviewguard::annotate {

using nlohmann::json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Llm: return "llm";
    case Source::Human: return "human";
    case Source::SyntheticTemplate: return "synthetic-template";
  }
  return "llm";
}

std::optional<Source> parse_source(std::string_view text) {
  if (text == "llm") return Source::Llm;
  if (text == "human") return Source::Human;
  if (text == "synthetic-template") return Source::SyntheticTemplate;
  return std::nullopt;
}

std::vector<Category> normalize_subtypes(std::vector<Category> subtypes) {
  for (auto c : subtypes) {
    if (c == Category::SR) throw ValidationError("SR is a verdict, not a deficient subtype");
  }
  std::sort(subtypes.begin(), subtypes.end());
  subtypes.erase(std::unique(subtypes.begin(), subtypes.end()), subtypes.end());
  return subtypes;
}

void AnnotationRecord::validate() const {
  if (review_id.empty()) throw ValidationError("annotation lacks review_id");
  if (round < 0) throw ValidationError("round must be >= 0");
  if (verdict == Verdict::DR && subtypes.empty()) {
    throw ValidationError("invariant violation: verdict DR requires at least one subtype (review " + review_id + ")");
  }
  if (verdict == Verdict::SR && !subtypes.empty()) {
    throw ValidationError("invariant violation: verdict SR must have no subtypes (review " + review_id + ")");
  }
}

bool AnnotationRecord::same_labels(const AnnotationRecord& o) const {
  return review_id == o.review_id && verdict == o.verdict && subtypes == o.subtypes && rationale == o.rationale;
}

json to_json(const AnnotationRecord& r) {
  json subtypes = json::array();
  for (auto c : r.subtypes) subtypes.push_back(canonical_name(c));
  return json{{"review_id", r.review_id},
              {"verdict", canonical_name(r.verdict)},
              {"subtypes", subtypes},
              {"rationale", r.rationale},
              {"source", to_string(r.source)},
              {"annotator_id", r.annotator_id},
              {"round", r.round},
              {"template_hash", r.template_hash},
              {"criteria_version", r.criteria_version}};
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  try {
    j.at("review_id").get_to(r.review_id);
    const auto verdict = j.at("verdict").get<std::string>();
    auto v = parse_verdict(verdict);
    if (!v) throw ValidationError("unknown verdict '" + verdict + "'");
    r.verdict = *v;
    std::vector<Category> subs;
    for (const auto& s : j.value("subtypes", json::array())) {
      const auto name = s.get<std::string>();
      auto c = parse_subtype(name);
      if (!c) throw ValidationError("unknown subtype '" + name + "'");
      subs.push_back(*c);
    }
    r.subtypes = normalize_subtypes(std::move(subs));
    r.rationale = j.value("rationale", std::string{});
    const auto source = j.value("source", std::string{"llm"});
    auto s = parse_source(source);
    if (!s) throw ValidationError("unknown source '" + source + "'");
    r.source = *s;
    r.annotator_id = j.value("annotator_id", std::string{});
    r.round = j.value("round", 0);
    r.template_hash = j.value("template_hash", std::string{});
    r.criteria_version = j.value("criteria_version", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed annotation record: ") + e.what());
  }
  r.validate();
  return r;
}

AnnotationStore AnnotationStore::open(const std::filesystem::path& path) {
  AnnotationStore store;
  if (std::filesystem::exists(path)) {
    jsonl::read(path, [&](const json& j, std::size_t line) {
      try {
        store.append(annotation_from_json(j));
      } catch (const ValidationError& e) {
        throw ParseError(path.string(), line, e.what());
      }
    });
  }
  store.path_ = path;
  return store;
}

AnnotationStore AnnotationStore::in_memory(std::vector<AnnotationRecord> records) {
  AnnotationStore store;
  for (const auto& r : records) store.append(r);
  return store;
}

void AnnotationStore::append(const AnnotationRecord& record) {
  record.validate();
  auto key = std::make_tuple(record.review_id, record.annotator_id, record.round);
  if (keys_.contains(key)) {
    throw DuplicateAnnotation(fmt::format("annotation already recorded for review {} by {} in round {}",
                                          record.review_id, record.annotator_id, record.round));
  }
  if (path_) jsonl::append(*path_, to_json(record));
  keys_.insert(std::move(key));
  records_.push_back(record);
}

bool AnnotationStore::contains(const std::string& review_id, const std::string& annotator_id, int round) const {
  return keys_.contains(std::make_tuple(review_id, annotator_id, round));
}

const AnnotationRecord* AnnotationStore::find(const std::string& review_id, const std::string& annotator_id,
                                              int round) const {
  for (const auto& r : records_) {
    if (r.review_id == review_id && r.annotator_id == annotator_id && r.round == round) return &r;
  }
  return nullptr;
}

std::vector<AnnotationRecord> AnnotationStore::round(int r) const {
  std::vector<AnnotationRecord> out;
  std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
               [r](const AnnotationRecord& a) { return a.round == r; });
  return out;
}

std::vector<AnnotationRecord> AnnotationStore::machine_labels() const {
  std::vector<AnnotationRecord> out;
  std::set<std::string> seen;
  for (const auto& r : records_) {
    if (r.round == 0 && seen.insert(r.review_id).second) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.review_id < b.review_id; });
  return out;
}

}  // namespace reviewguard::annotate
