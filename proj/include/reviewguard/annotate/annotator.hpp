#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reviewguard/annotate/prompt.hpp"
#include "reviewguard/annotate/record.hpp"
#include "reviewguard/corpus/store.hpp"
#include "reviewguard/llmio/client.hpp"

namespace reviewguard::annotate {

struct AnnotatorOptions {
  std::string annotator_id;  // defaults to the backend model id
  std::string criteria_version;  // defaults to the bundled taxonomy version
  PromptOptions prompt;
  int max_parallel = 4;
};

struct PaperAnnotation {
  std::string paper_id;
  std::vector<AnnotationRecord> records;
  std::vector<std::string> dropped_ids;  // left out of the prompt by truncation
  int model_calls = 0;
  std::optional<std::string> failure;
  std::optional<std::string> raw_reply;  // kept when parsing failed twice
};

// One chat call per paper plus at most one repair retry. Results come back
// in input order whatever the completion order.
std::vector<PaperAnnotation> annotate_papers(const std::vector<corpus::PaperBundle>& papers, llmio::Client& client,
                                             const AnnotatorOptions& options,
                                             const PromptTemplate& tmpl = PromptTemplate::bundled("templates/annotate.txt"));

}  // namespace reviewguard::annotate
