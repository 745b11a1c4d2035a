#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace reviewguard {

// The responsibility taxonomy: one sufficient category and six deficient
// subtypes. Enumerator order is the canonical order used in every file.
enum class Category : std::uint8_t {
  SR,
  SUPERFICIALITY,
  LACK_OF_CONSTRUCTIVENESS,
  CURSORY_JUDGMENT,
  OVERLY_HARSH_MALICIOUS,
  UNINFORMED,
  OTHERS,
};

enum class Verdict : std::uint8_t { SR, DR };

inline constexpr std::array<Category, 7> kAllCategories = {
    Category::SR,
    Category::SUPERFICIALITY,
    Category::LACK_OF_CONSTRUCTIVENESS,
    Category::CURSORY_JUDGMENT,
    Category::OVERLY_HARSH_MALICIOUS,
    Category::UNINFORMED,
    Category::OTHERS,
};

inline constexpr std::array<Category, 6> kSubtypes = {
    Category::SUPERFICIALITY,         Category::LACK_OF_CONSTRUCTIVENESS,
    Category::CURSORY_JUDGMENT,       Category::OVERLY_HARSH_MALICIOUS,
    Category::UNINFORMED,             Category::OTHERS,
};

constexpr std::size_t category_rank(Category c) { return static_cast<std::size_t>(c); }

// Position of a deficient subtype in the 6-bit multi-label vector.
constexpr std::size_t subtype_index(Category c) { return category_rank(c) - 1; }

std::string_view canonical_name(Category c);
std::string_view canonical_name(Verdict v);

// Table-style display name and operational definition, read from the bundled
// taxonomy data file.
const std::string& display_name(Category c);
const std::string& definition(Category c);
const std::string& deficient_definition();
const std::string& taxonomy_version();

// Accepts canonical ids ("LACK_OF_CONSTRUCTIVENESS") or display names
// ("Lack of constructiveness"), case-insensitively.
std::optional<Category> parse_category(std::string_view text);
std::optional<Category> parse_subtype(std::string_view text);
std::optional<Verdict> parse_verdict(std::string_view text);

}  // namespace reviewguard
