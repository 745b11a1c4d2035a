#include "reviewguard/taxonomy.hpp"

#include <json.hpp>

#include "reviewguard/error.hpp"
#include "reviewguard/resources.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard {

namespace {

struct TaxonomyData {
  std::array<std::string, 7> names;
  std::array<std::string, 7> definitions;
  std::string deficient;
  std::string version;
};

const TaxonomyData& data() {
  static const TaxonomyData instance = [] {
    TaxonomyData d;
    auto doc = nlohmann::json::parse(resources::require("taxonomy.json"));
    d.version = doc.at("version").get<std::string>();
    d.deficient = doc.at("deficient").at("definition").get<std::string>();
    std::array<bool, 7> seen{};
    for (const auto& entry : doc.at("categories")) {
      const auto id = entry.at("id").get<std::string>();
      std::optional<Category> cat;
      for (auto c : kAllCategories) {
        if (canonical_name(c) == id) cat = c;
      }
      if (!cat) throw Error("taxonomy.json: unknown category id " + id);
      auto i = category_rank(*cat);
      d.names[i] = entry.at("name").get<std::string>();
      d.definitions[i] = entry.at("definition").get<std::string>();
      seen[i] = true;
    }
    for (bool s : seen) {
      if (!s) throw Error("taxonomy.json: incomplete category list");
    }
    return d;
  }();
  return instance;
}

}  // namespace

std::string_view canonical_name(Category c) {
  switch (c) {
    case Category::SR: return "SR";
    case Category::SUPERFICIALITY: return "SUPERFICIALITY";
    case Category::LACK_OF_CONSTRUCTIVENESS: return "LACK_OF_CONSTRUCTIVENESS";
    case Category::CURSORY_JUDGMENT: return "CURSORY_JUDGMENT";
    case Category::OVERLY_HARSH_MALICIOUS: return "OVERLY_HARSH_MALICIOUS";
    case Category::UNINFORMED: return "UNINFORMED";
    case Category::OTHERS: return "OTHERS";
  }
  return "?";
}

std::string_view canonical_name(Verdict v) { return v == Verdict::SR ? "SR" : "DR"; }

const std::string& display_name(Category c) { return data().names[category_rank(c)]; }
const std::string& definition(Category c) { return data().definitions[category_rank(c)]; }
const std::string& deficient_definition() { return data().deficient; }
const std::string& taxonomy_version() { return data().version; }

std::optional<Category> parse_category(std::string_view text) {
  const auto needle = to_lower(trim(text));
  for (auto c : kAllCategories) {
    if (to_lower(canonical_name(c)) == needle || to_lower(display_name(c)) == needle) return c;
  }
  return std::nullopt;
}

std::optional<Category> parse_subtype(std::string_view text) {
  auto c = parse_category(text);
  if (c && *c == Category::SR) return std::nullopt;
  return c;
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  const auto v = to_lower(trim(text));
  if (v == "sr") return Verdict::SR;
  if (v == "dr") return Verdict::DR;
  return std::nullopt;
}

}  // namespace reviewguard

namespace reviewguard::resources {

std::string_view require(std::string_view path) {
  auto r = find(path);
  if (!r) throw Error("missing bundled resource: " + std::string(path));
  return *r;
}

}  // namespace reviewguard::resources
