#pragma once

#include <map>
#include <string>
#include <string_view>

namespace reviewguard {

// Text template with "[system]" / "[user]" sections and {{name}} placeholders.
class PromptTemplate {
 public:
  static PromptTemplate parse(std::string_view text);
  // Bundled template under data/, e.g. "templates/annotate.txt".
  static PromptTemplate bundled(std::string_view resource);

  struct Rendered {
    std::string system;
    std::string user;
  };
  // Every placeholder must be bound (ValidationError otherwise); extra values are ignored.
  Rendered render(const std::map<std::string, std::string>& values) const;

  const std::string& hash() const { return hash_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::string system_;
  std::string user_;
  std::string hash_;
};

}  // namespace reviewguard
