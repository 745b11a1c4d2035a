#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/corpus/records.hpp"
#include "reviewguard/util/prompt_template.hpp"

namespace reviewguard::annotate {

// Rough size model shared by budget checks: one token per four bytes.
std::size_t estimate_tokens(std::string_view text);

struct PromptOptions {
  std::size_t token_budget = 100000;
};

struct AnnotationPrompt {
  std::string system;
  std::string user;
  std::string template_hash;
  std::vector<std::string> included_ids;
  std::vector<std::string> dropped_ids;
  bool text_clipped = false;  // the last kept review had to be shortened

  bool truncated() const { return !dropped_ids.empty() || text_clipped; }
  std::size_t estimated_tokens() const { return estimate_tokens(system) + estimate_tokens(user); }
};

// The seven "### ID (Name)" definition blocks embedded in prompts.
std::string render_category_definitions();

// Reviews over the budget are dropped from the end; a truncation marker is
// added whenever anything was cut. Throws ValidationError on an empty
// abstract, no reviews, or a template that alone exceeds the budget.
AnnotationPrompt build_annotation_prompt(const corpus::PaperRecord& paper,
                                         const std::vector<corpus::ReviewRecord>& reviews,
                                         const PromptOptions& options = {},
                                         const PromptTemplate& tmpl = PromptTemplate::bundled("templates/annotate.txt"));

// Recovers the review payload embedded in a rendered prompt.
nlohmann::json extract_prompt_reviews(const std::string& prompt_text);

}  // namespace reviewguard::annotate
