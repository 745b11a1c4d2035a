#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Files compiled into the binary at build time.
namespace reviewguard::resources {

// Bundled data: taxonomy.json, easy_words.txt, abbreviations.txt, templates/...
std::optional<std::string_view> find(std::string_view path);
std::vector<std::string_view> list();

// Throws reviewguard::Error when the resource is missing.
std::string_view require(std::string_view path);

}  // namespace reviewguard::resources

// Validation-UI static assets served by `reviewguard serve`.
namespace reviewguard::ui_assets {

std::optional<std::string_view> find(std::string_view path);
std::vector<std::string_view> list();

}  // namespace reviewguard::ui_assets
