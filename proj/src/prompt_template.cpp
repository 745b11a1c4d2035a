#include <set>

#include "reviewguard/error.hpp"
#include "reviewguard/resources.hpp"
#include "reviewguard/util/prompt_template.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard {

namespace {

std::set<std::string> placeholders(const std::string& text) {
  std::set<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string::npos) {
    const auto end = text.find("}}", pos + 2);
    if (end == std::string::npos) throw ValidationError("template: unterminated placeholder");
    out.insert(text.substr(pos + 2, end - pos - 2));
    pos = end + 2;
  }
  return out;
}

std::string substitute(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = text.find("}}", open + 2);
    out.append(text, pos, open - pos);
    out += values.at(text.substr(open + 2, close - open - 2));
    pos = close + 2;
  }
  out.append(text, pos);
  return out;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate t;
  t.source_ = std::string(text);
  t.hash_ = sha256_hex(text);
  const auto sys = t.source_.find("[system]\n");
  const auto usr = t.source_.find("[user]\n");
  if (usr == std::string::npos) throw ValidationError("template: missing [user] section");
  if (sys != std::string::npos && sys < usr) {
    t.system_ = std::string(trim(t.source_.substr(sys + 9, usr - sys - 9)));
  }
  t.user_ = std::string(trim(t.source_.substr(usr + 7)));
  return t;
}

PromptTemplate PromptTemplate::bundled(std::string_view resource) { return parse(resources::require(resource)); }

PromptTemplate::Rendered PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  auto names = placeholders(system_);
  names.merge(placeholders(user_));
  for (const auto& n : names) {
    if (!values.contains(n)) throw ValidationError("template: unbound placeholder {{" + n + "}}");
  }
  return {substitute(system_, values), substitute(user_, values)};
}

}  // namespace reviewguard
